#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/denoiser.hpp"
#include "core/nn/adamw.hpp"
#include "core/toydata.hpp"

namespace dt::trainer {

struct TrainConfig {
    int epochs = 200; // paper scale is 5000; 200 is the desk-scale default
    int batch_size = 16;
    double learning_rate = 2e-5;
    double weight_decay = 1e-4;
    uint64_t seed = 0;
    int crops_per_track_per_epoch = 1;
};

// Corpus loaded, mel-transformed and normalized once up front.
struct PreparedCorpus {
    struct Track {
        std::string name;
        Mat x_norm, y_norm; // [128 x F], in [-1, 1]
    };
    std::vector<Track> tracks;
    spectro::NormalizationStats stats; // corpus-level min/max over both timbres
};

PreparedCorpus prepare_corpus(const std::vector<toydata::PairPaths>& pairs);

struct Batch {
    nn::Tensor<float> x, y; // [B,1,128,128]
};

// One epoch of shuffled, aligned random crops, chunked into batches. X and Y
// always share the frame offset.
std::vector<Batch> make_epoch_batches(const PreparedCorpus& corpus, const TrainConfig& cfg,
                                      Rng& rng);

// One optimizer step on a batch of aligned slice pairs: draws per-item t and
// noise, forms the forward marginal, and minimizes mean |eps_hat - eps|.
double train_step(Denoiser& model, nn::AdamW<float>& opt, const nn::Tensor<float>& x_cond,
                  const nn::Tensor<float>& y0, Rng& rng);

struct FitResult {
    int best_epoch = 0; // 1-based
    double best_loss = 0.0;
    std::vector<double> epoch_losses;
};

using EpochCallback = std::function<void(int epoch, double mean_loss, double wall_s)>;

// Full training loop. Per epoch: crops_per_track_per_epoch aligned random
// crops per track, shuffled, batched. Keeps the epoch with minimum mean loss
// (earliest on ties) and writes the checkpoint plus train_log.jsonl under
// out_dir. Deterministic under cfg.seed.
FitResult fit(const PreparedCorpus& corpus, const TrainConfig& cfg, const nn::UNetConfig& ucfg,
              const schedule::ScheduleConfig& scfg, const std::string& out_dir,
              const EpochCallback& on_epoch = {});

} // namespace dt::trainer
