#pragma once

#include <string>
#include <vector>

#include "core/audio.hpp"

namespace dt::toydata {

// Synthetic paired-timbre corpus: the same monophonic note sequence rendered
// as a decaying sine (timbre A) and as a band-limited sawtooth with slower
// decay (timbre B). Desk-scale stand-in for a two-domain paired dataset.
struct ToyConfig {
    uint64_t seed = 0;
    int n_tracks = 10;
    double duration_s = 4.0;
    int voices = 1; // 2 = summed two-voice mixture tracks
};

// Writes out_dir/timbreA/*.wav, out_dir/timbreB/*.wav and manifest.json.
// Returns the manifest path. Bit-identical output for identical configs.
std::string generate_paired_dataset(const ToyConfig& cfg, const std::string& out_dir);

struct PairPaths {
    std::string name;   // shared basename without extension
    std::string x_path; // conditioning timbre
    std::string y_path; // target timbre
};

// Two-subdirectory layout, pairs matched by basename. a_to_b picks which of
// the (alphabetically sorted) subdirectories conditions. A basename present
// on one side only is a dataset error naming the file.
std::vector<PairPaths> load_paired_corpus(const std::string& dir, bool a_to_b = true);

// Single rendered track, exposed for tests.
AudioBuffer render_toy_track(uint64_t track_seed, double duration_s, int voices, bool timbre_b);

} // namespace dt::toydata
