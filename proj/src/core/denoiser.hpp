#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/nn/unet.hpp"
#include "core/schedule.hpp"
#include "core/spectro.hpp"

namespace dt {

struct TrainingMeta {
    int epoch = 0;
    double loss = 0.0;
    uint64_t seed = 0;
};

// The trained artifact: network weights plus everything needed to reproduce
// the pipeline around them (schedule clamps, normalization stats, config).
// Stored on disk as weights.bin + manifest.json.
class Denoiser {
public:
    Denoiser(const nn::UNetConfig& ucfg, const schedule::ScheduleConfig& scfg, uint64_t init_seed);

    nn::UNet<float>& net() { return *net_; }
    const nn::UNetConfig& unet_config() const { return ucfg_; }
    const schedule::ScheduleConfig& schedule_config() const { return scfg_; }

    spectro::NormalizationStats stats;
    TrainingMeta meta;

    // Inference-mode noise estimate; t holds one diffusion time per item.
    nn::Tensor<float> predict_noise(const nn::Tensor<float>& yt, const nn::Tensor<float>& cond,
                                    const std::vector<double>& t);

    void save(const std::string& dir);
    static Denoiser load(const std::string& dir);
    static std::string manifest_json(const std::string& dir);

private:
    nn::UNetConfig ucfg_;
    schedule::ScheduleConfig scfg_;
    std::unique_ptr<nn::UNet<float>> net_;
};

} // namespace dt
