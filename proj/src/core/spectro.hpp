#pragma once

#include <string>
#include <vector>

#include "core/audio.hpp"
#include "core/mat.hpp"
#include "core/rng.hpp"

namespace dt::spectro {

// 0.020 s Hann window, 50% overlap at 16 kHz.
constexpr int kWindow = 320;
constexpr int kHop = 160;
constexpr int kBins = kWindow / 2 + 1; // 161
constexpr int kMelBins = 128;
constexpr int kSliceFrames = 128;
constexpr double kHopSeconds = 0.010;
constexpr double kFMin = 0.0;
constexpr double kFMax = 8000.0; // Nyquist-limited
constexpr double kFloorEps = 1e-5;

// HTK mel map.
double hz_to_mel(double f);
double mel_to_hz(double m);

// 128 peak-one triangular filters over [0, 8000] Hz, [128 x 161]. Cached.
const Mat& mel_filterbank();

struct Stft {
    Mat re, im; // [161 x F]
    int frames() const { return re.cols; }
};

// Center-padded analysis: F = 1 + floor(len/160).
Stft stft(const AudioBuffer& audio);
Mat magnitude(const Stft& s);

// Weighted overlap-add inverse; output length = F * 160.
AudioBuffer istft(const Stft& s);

// power -> mel -> ln(. + 1e-5); input is the 161-bin magnitude spectrogram.
Mat log_mel(const Mat& stft_mag);

struct NormalizationStats {
    double lo = 0.0, hi = 0.0;
};

// Affine lo->-1, hi->+1 with clipping; lo == hi maps everything to 0 and
// reports the degenerate case through the flag.
Mat normalize(const Mat& spec, const NormalizationStats& stats, bool* degenerate = nullptr);
Mat denormalize(const Mat& spec, const NormalizationStats& stats);

struct SpectrogramSlice {
    Mat values; // [128 x 128]
    int origin_frame = 0;
    int pad_frames = 0;
};

// ceil(F/128) contiguous slices; the trailing partial slice is padded with -1
// (normalized silence floor).
std::vector<SpectrogramSlice> slice_sequential(const Mat& normalized);

// One uniformly placed 128-frame crop, deterministic under the seed.
SpectrogramSlice slice_random_crop(const Mat& normalized, uint64_t seed);

// Crop at a caller-chosen offset (used for aligned X/Y training crops).
SpectrogramSlice slice_at(const Mat& normalized, int offset);

// exp -> regularized mel pseudo-inverse (clipped at 0) -> Griffin-Lim.
AudioBuffer invert_to_waveform(const Mat& logmel, int iterations = 32);

// One-line JSON header + row-major float32 LE payload.
void save_spectrogram(const std::string& path, const Mat& spec, const NormalizationStats& stats);
Mat load_spectrogram(const std::string& path, NormalizationStats* stats = nullptr);

} // namespace dt::spectro
