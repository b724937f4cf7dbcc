#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "core/audio.hpp"
#include "core/mat.hpp"

namespace dt::metrics {

struct GaussianStats {
    std::vector<double> mu;
    Mat sigma; // symmetric [d x d]
    int n = 0;
};

using Embedding = std::vector<double>;
using EmbedFn = std::function<std::vector<Embedding>(const AudioBuffer&)>;
using PitchFn = std::function<std::set<int>(const AudioBuffer&)>;

// Built-in embedding: per 1-second window, [per-mel-band mean, per-mel-band
// std, spectral centroid, spectral flux] -> d = 258.
std::vector<Embedding> embed_specstats(const AudioBuffer& audio);

// Sample mean and unbiased covariance, symmetrized. n >= 2 required.
GaussianStats gaussian_stats(const std::vector<Embedding>& embeddings);

// Frechet (Wasserstein-2) distance between Gaussians; matrix square roots by
// symmetric eigendecomposition with negative eigenvalues clipped at zero.
double frechet_distance(const GaussianStats& r, const GaussianStats& g);

// Built-in multi-pitch extractor: per-frame spectral peaks above a -40 dB
// relative threshold, parabolic interpolation, harmonic-duplicate
// suppression, semitone rounding; a pitch must survive >= 5 consecutive
// frames.
std::set<int> extract_pitch_set(const AudioBuffer& audio);

// 1 - |A n B| / |A u B|; both empty -> 0.
double jaccard_distance(const std::set<int>& a, const std::set<int>& b);

struct EvalReport {
    double fad = 0.0;
    std::vector<double> jd_per_track;
    double jd_mean = 0.0;
    std::string embedding_name = "specstats";
    std::string pitch_extractor_name = "peakpick";

    std::string to_json(int indent = 2) const;
};

// FAD over pooled embeddings of the two corpora plus per-pair Jaccard pitch
// distance, matched by basename. Custom embedding / pitch extractors may be
// plugged in; empty std::function selects the built-ins.
EvalReport evaluate(const std::string& generated_dir, const std::string& reference_dir,
                    const EmbedFn& embed = {}, const PitchFn& pitch = {},
                    const std::string& embedding_name = "specstats",
                    const std::string& pitch_extractor_name = "peakpick");

} // namespace dt::metrics
