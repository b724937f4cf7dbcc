#include "core/spectro.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "core/error.hpp"

#include <json.hpp>

namespace dt::spectro {

namespace {

constexpr double kPi = 3.14159265358979323846;

// C = A[m x k] * B[k x n], row-major doubles.
void dgemm_rm(int m, int n, int k, const double* a, const double* b, double* c) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0, a, k, b, n, 0.0, c, n);
}

// Periodic Hann; sums to one at 50% hop, which keeps OLA exact.
const std::vector<double>& hann_window() {
    static const std::vector<double> w = [] {
        std::vector<double> v(kWindow);
        for (int i = 0; i < kWindow; ++i) v[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / kWindow);
        return v;
    }();
    return w;
}

struct DftTables {
    Mat fwd_cos;  // [161 x 320]
    Mat fwd_sin;  // [161 x 320]
    Mat inv_cos;  // [320 x 161], interior-bin doubling folded in
    Mat inv_sin;  // [320 x 161]
};

const DftTables& dft_tables() {
    static const DftTables t = [] {
        DftTables d;
        d.fwd_cos = Mat(kBins, kWindow);
        d.fwd_sin = Mat(kBins, kWindow);
        d.inv_cos = Mat(kWindow, kBins);
        d.inv_sin = Mat(kWindow, kBins);
        for (int k = 0; k < kBins; ++k) {
            for (int n = 0; n < kWindow; ++n) {
                double a = 2.0 * kPi * k * n / kWindow;
                d.fwd_cos.at(k, n) = std::cos(a);
                d.fwd_sin.at(k, n) = -std::sin(a);
                double scale = (k == 0 || k == kBins - 1) ? 1.0 : 2.0;
                d.inv_cos.at(n, k) = scale * std::cos(a) / kWindow;
                d.inv_sin.at(n, k) = -scale * std::sin(a) / kWindow;
            }
        }
        return d;
    }();
    return t;
}

} // namespace

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

const Mat& mel_filterbank() {
    static const Mat fb = [] {
        Mat m(kMelBins, kBins);
        const double mel_lo = hz_to_mel(kFMin);
        const double mel_hi = hz_to_mel(kFMax);
        std::vector<double> edge(kMelBins + 2);
        for (int i = 0; i < kMelBins + 2; ++i) {
            edge[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kMelBins + 1));
        }
        const double bin_hz = static_cast<double>(audio::kSampleRate) / kWindow;
        for (int b = 0; b < kMelBins; ++b) {
            double l = edge[b], c = edge[b + 1], r = edge[b + 2];
            for (int k = 0; k < kBins; ++k) {
                double f = k * bin_hz;
                double w = 0.0;
                if (f > l && f < c && c > l) w = (f - l) / (c - l);
                else if (f >= c && f < r && r > c) w = (r - f) / (r - c);
                m.at(b, k) = w;
            }
        }
        return m;
    }();
    return fb;
}

Stft stft(const AudioBuffer& audio) {
    if (audio.samples.empty()) fail(Err::invalid, "stft: empty audio");
    const auto& win = hann_window();
    const int len = static_cast<int>(audio.samples.size());
    const int frames = 1 + len / kHop;

    // center padding: kHop zeros before, enough after for the last frame
    std::vector<double> padded(static_cast<size_t>(kHop) + len + kWindow, 0.0);
    for (int i = 0; i < len; ++i) padded[kHop + i] = audio.samples[i];

    Mat framed(kWindow, frames);
    for (int f = 0; f < frames; ++f) {
        const double* src = padded.data() + static_cast<size_t>(f) * kHop;
        for (int n = 0; n < kWindow; ++n) framed.at(n, f) = src[n] * win[n];
    }

    const auto& t = dft_tables();
    Stft out;
    out.re = Mat(kBins, frames);
    out.im = Mat(kBins, frames);
    dgemm_rm(kBins, frames, kWindow, t.fwd_cos.v.data(), framed.v.data(), out.re.v.data());
    dgemm_rm(kBins, frames, kWindow, t.fwd_sin.v.data(), framed.v.data(), out.im.v.data());
    return out;
}

Mat magnitude(const Stft& s) {
    Mat m(s.re.rows, s.re.cols);
    for (size_t i = 0; i < m.size(); ++i) {
        m.v[i] = std::sqrt(s.re.v[i] * s.re.v[i] + s.im.v[i] * s.im.v[i]);
    }
    return m;
}

AudioBuffer istft(const Stft& s) {
    const int frames = s.frames();
    const auto& t = dft_tables();
    const auto& win = hann_window();

    Mat rec(kWindow, frames);
    {
        Mat tmp(kWindow, frames);
        dgemm_rm(kWindow, frames, kBins, t.inv_cos.v.data(), s.re.v.data(), rec.v.data());
        dgemm_rm(kWindow, frames, kBins, t.inv_sin.v.data(), s.im.v.data(), tmp.v.data());
        for (size_t i = 0; i < rec.size(); ++i) rec.v[i] += tmp.v[i];
    }

    const size_t ola_len = static_cast<size_t>(frames - 1) * kHop + kWindow;
    std::vector<double> acc(ola_len, 0.0), wsq(ola_len, 0.0);
    for (int f = 0; f < frames; ++f) {
        size_t off = static_cast<size_t>(f) * kHop;
        for (int n = 0; n < kWindow; ++n) {
            acc[off + n] += rec.at(n, f) * win[n];
            wsq[off + n] += win[n] * win[n];
        }
    }

    AudioBuffer out;
    out.sample_rate = audio::kSampleRate;
    out.samples.resize(static_cast<size_t>(frames) * kHop);
    // drop the kHop center-padding lead-in
    for (size_t i = 0; i < out.samples.size(); ++i) {
        size_t j = i + kHop;
        double d = (j < ola_len && wsq[j] > 1e-9) ? acc[j] / wsq[j] : 0.0;
        out.samples[i] = static_cast<float>(d);
    }
    return out;
}

Mat log_mel(const Mat& stft_mag) {
    if (stft_mag.rows != kBins) {
        fail(Err::invalid, "log_mel: expected " + std::to_string(kBins) + " bins, got " +
                               std::to_string(stft_mag.rows));
    }
    Mat power(stft_mag.rows, stft_mag.cols);
    for (size_t i = 0; i < power.size(); ++i) power.v[i] = stft_mag.v[i] * stft_mag.v[i];

    const Mat& fb = mel_filterbank();
    Mat mel(kMelBins, stft_mag.cols);
    dgemm_rm(kMelBins, stft_mag.cols, kBins, fb.v.data(), power.v.data(), mel.v.data());
    for (size_t i = 0; i < mel.size(); ++i) mel.v[i] = std::log(std::max(mel.v[i], 0.0) + kFloorEps);
    return mel;
}

Mat normalize(const Mat& spec, const NormalizationStats& stats, bool* degenerate) {
    if (stats.lo > stats.hi) fail(Err::invalid, "normalize: lo > hi");
    Mat out(spec.rows, spec.cols);
    if (degenerate) *degenerate = false;
    if (stats.hi == stats.lo) {
        if (degenerate) *degenerate = true;
        return out; // all zeros
    }
    const double scale = 2.0 / (stats.hi - stats.lo);
    for (size_t i = 0; i < spec.size(); ++i) {
        double x = std::clamp(spec.v[i], stats.lo, stats.hi);
        out.v[i] = (x - stats.lo) * scale - 1.0;
    }
    return out;
}

Mat denormalize(const Mat& spec, const NormalizationStats& stats) {
    Mat out(spec.rows, spec.cols);
    const double scale = (stats.hi - stats.lo) / 2.0;
    for (size_t i = 0; i < spec.size(); ++i) out.v[i] = (spec.v[i] + 1.0) * scale + stats.lo;
    return out;
}

SpectrogramSlice slice_at(const Mat& normalized, int offset) {
    SpectrogramSlice s;
    s.origin_frame = offset;
    s.values = Mat(normalized.rows, kSliceFrames);
    int avail = std::max(0, std::min(kSliceFrames, normalized.cols - offset));
    s.pad_frames = kSliceFrames - avail;
    for (int r = 0; r < normalized.rows; ++r) {
        for (int c = 0; c < kSliceFrames; ++c) {
            s.values.at(r, c) = (c < avail) ? normalized.at(r, offset + c) : -1.0;
        }
    }
    return s;
}

std::vector<SpectrogramSlice> slice_sequential(const Mat& normalized) {
    if (normalized.cols < 1) fail(Err::invalid, "slice_frames: no frames");
    int n = (normalized.cols + kSliceFrames - 1) / kSliceFrames;
    std::vector<SpectrogramSlice> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(slice_at(normalized, i * kSliceFrames));
    return out;
}

SpectrogramSlice slice_random_crop(const Mat& normalized, uint64_t seed) {
    if (normalized.cols < 1) fail(Err::invalid, "slice_frames: no frames");
    Rng rng(seed);
    int max_off = std::max(0, normalized.cols - kSliceFrames);
    int off = rng.uniform_int(0, max_off);
    return slice_at(normalized, off);
}

namespace {

// Minimum-norm solve power = fb^T (fb fb^T + lambda I)^{-1} mel, factor cached.
// Some low-frequency filters are narrower than one FFT bin and therefore empty,
// so the Gram matrix needs the ridge term.
struct MelInverse {
    Mat chol; // lower Cholesky factor of the regularized Gram matrix
    MelInverse() {
        const Mat& fb = mel_filterbank();
        Mat g(kMelBins, kMelBins);
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, kMelBins, kMelBins, kBins, 1.0,
                    fb.v.data(), kBins, fb.v.data(), kBins, 0.0, g.v.data(), kMelBins);
        double tr = 0.0;
        for (int i = 0; i < kMelBins; ++i) tr += g.at(i, i);
        double lambda = 1e-8 * tr / kMelBins + 1e-12;
        for (int i = 0; i < kMelBins; ++i) g.at(i, i) += lambda;
        // in-place Cholesky
        chol = g;
        for (int j = 0; j < kMelBins; ++j) {
            for (int k = 0; k < j; ++k) {
                double f = chol.at(j, k);
                for (int i = j; i < kMelBins; ++i) chol.at(i, j) -= chol.at(i, k) * f;
            }
            double d = std::sqrt(std::max(chol.at(j, j), 1e-300));
            for (int i = j; i < kMelBins; ++i) chol.at(i, j) /= d;
        }
    }

    // solve (L L^T) x = b for one column
    void solve(double* b) const {
        for (int i = 0; i < kMelBins; ++i) {
            double s = b[i];
            for (int k = 0; k < i; ++k) s -= chol.at(i, k) * b[k];
            b[i] = s / chol.at(i, i);
        }
        for (int i = kMelBins - 1; i >= 0; --i) {
            double s = b[i];
            for (int k = i + 1; k < kMelBins; ++k) s -= chol.at(k, i) * b[k];
            b[i] = s / chol.at(i, i);
        }
    }
};

} // namespace

AudioBuffer invert_to_waveform(const Mat& logmel, int iterations) {
    if (logmel.rows != kMelBins) fail(Err::invalid, "invert_to_waveform: expected 128 mel bins");
    const int frames = logmel.cols;
    static const MelInverse inv;

    // mel power, column-wise Gram solve, back-projection, clip at zero
    Mat mel(kMelBins, frames);
    for (size_t i = 0; i < mel.size(); ++i) mel.v[i] = std::max(std::exp(logmel.v[i]) - kFloorEps, 0.0);

    Mat y(kMelBins, frames); // (fb fb^T + l I)^{-1} mel, column by column
    {
        std::vector<double> col(kMelBins);
        for (int c = 0; c < frames; ++c) {
            for (int r = 0; r < kMelBins; ++r) col[r] = mel.at(r, c);
            inv.solve(col.data());
            for (int r = 0; r < kMelBins; ++r) y.at(r, c) = col[r];
        }
    }
    Mat power(kBins, frames);
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, kBins, frames, kMelBins, 1.0,
                mel_filterbank().v.data(), kBins, y.v.data(), frames, 0.0, power.v.data(), frames);

    Mat mag(kBins, frames);
    for (size_t i = 0; i < mag.size(); ++i) mag.v[i] = std::sqrt(std::max(power.v[i], 0.0));

    // Griffin-Lim with zero initial phase
    Stft s;
    s.re = mag;
    s.im = Mat(kBins, frames);
    for (int it = 0; it < iterations; ++it) {
        AudioBuffer wav = istft(s);
        Stft est = stft(wav);
        // est has one trailing frame beyond the target length; keep the first `frames`
        for (int k = 0; k < kBins; ++k) {
            for (int f = 0; f < frames; ++f) {
                double re = est.re.at(k, f), im = est.im.at(k, f);
                double m = std::sqrt(re * re + im * im);
                double g = mag.at(k, f) / (m > 1e-12 ? m : 1.0);
                s.re.at(k, f) = re * g;
                s.im.at(k, f) = im * g;
            }
        }
    }
    AudioBuffer out = istft(s);
    out.samples.resize(static_cast<size_t>(frames) * kHop);
    return out;
}

void save_spectrogram(const std::string& path, const Mat& spec, const NormalizationStats& stats) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(Err::io, "cannot write spectrogram: " + path);
    nlohmann::json hdr{{"bins", spec.rows}, {"frames", spec.cols}, {"hop_s", kHopSeconds},
                       {"lo", stats.lo},    {"hi", stats.hi}};
    std::string line = hdr.dump();
    f.write(line.data(), static_cast<std::streamsize>(line.size()));
    f.put('\n');
    std::vector<float> payload(spec.size());
    for (size_t i = 0; i < spec.size(); ++i) payload[i] = static_cast<float>(spec.v[i]);
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) fail(Err::io, "short write: " + path);
}

Mat load_spectrogram(const std::string& path, NormalizationStats* stats) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(Err::io, "cannot open spectrogram: " + path);
    std::string line;
    if (!std::getline(f, line)) fail(Err::format, "missing spectrogram header: " + path);
    nlohmann::json hdr = nlohmann::json::parse(line, nullptr, false);
    if (hdr.is_discarded()) fail(Err::format, "bad spectrogram header: " + path);
    int bins = hdr.at("bins").get<int>();
    int frames = hdr.at("frames").get<int>();
    if (stats) {
        stats->lo = hdr.at("lo").get<double>();
        stats->hi = hdr.at("hi").get<double>();
    }
    Mat out(bins, frames);
    std::vector<float> payload(out.size());
    f.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) fail(Err::format, "truncated spectrogram payload: " + path);
    for (size_t i = 0; i < out.size(); ++i) out.v[i] = payload[i];
    return out;
}

} // namespace dt::spectro
