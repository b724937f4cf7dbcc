#pragma once

#include <string>
#include <vector>

#include "core/denoiser.hpp"

namespace dt::transfer {

struct TransferOptions {
    int steps = 50;
    uint64_t seed = 0;
    int griffin_lim_iters = 32;
    bool dump_spectrograms = false; // write a .spec next to each output wav
};

struct TrackResult {
    AudioBuffer audio;
    Mat generated_logmel; // [128 x F], denormalized
};

// Full inference path: conditioning log-mel -> normalize with checkpoint
// stats -> sequential slices -> DDIM per slice with ONE shared noise tensor
// -> clip, concatenate, trim pad -> denormalize -> Griffin-Lim.
TrackResult transfer_track(const AudioBuffer& input, Denoiser& model, const TransferOptions& opt);

struct CorpusResult {
    int n_ok = 0;
    std::vector<std::string> failed; // input basenames that raised
};

// Batch driver: every *.wav in dir_in becomes dir_out/<same name>.wav, each
// with the same seed. Individual failures are collected, not fatal.
CorpusResult transfer_corpus(const std::string& dir_in, Denoiser& model,
                             const std::string& dir_out, const TransferOptions& opt);

} // namespace dt::transfer
