#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dt::config {

// Fully resolved run configuration. Precedence: CLI overrides > config file >
// defaults. The defaults mirror the published training setup at paper scale.
struct RunConfig {
    double learning_rate = 2e-5;
    double weight_decay = 1e-4;
    int batch_size = 16;
    int epochs = 5000;
    int steps = 50;
    double window_s = 0.020;
    double overlap = 0.5;
    int mel_bins = 128;
    uint64_t seed = 0;
    int crops_per_track_per_epoch = 1;
    std::vector<int> stage_filters{64, 128, 256};
    int blocks_per_stage = 4;
    int bottleneck_filters = 512;
    int time_embed_dims = 32;
    double max_signal_rate = 0.95;
    double min_signal_rate = 0.02;
    int griffin_lim_iters = 32;
    std::string direction = "a2b";

    std::string to_json(int indent = -1) const;
};

// file_json: flat JSON object from a config file (nullable). overrides_json:
// flat JSON object assembled from CLI flags (nullable). Unknown keys raise a
// config error listing the valid keys and the closest match; type mismatches
// name the expected type. DIFFTRANSFER_SEED serves as the seed default when
// neither source sets one.
RunConfig resolve(const std::string* file_json, const std::string* overrides_json);

} // namespace dt::config
