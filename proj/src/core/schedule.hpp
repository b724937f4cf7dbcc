#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace dt::schedule {

// Clamps keep both endpoints away from zero SNR, where noise prediction is
// ill-posed.
struct ScheduleConfig {
    double max_signal_rate = 0.95;
    double min_signal_rate = 0.02;
};

struct DiffusionRates {
    double t = 0.0;
    double signal_rate = 0.0;
    double noise_rate = 0.0;
};

// Clamped-angle cosine schedule: the diffusion angle runs linearly from
// acos(max_signal_rate) to acos(min_signal_rate), so signal^2 + noise^2 = 1
// holds identically.
inline DiffusionRates cosine_rates(double t, const ScheduleConfig& cfg = {}) {
    if (!(t >= 0.0 && t <= 1.0)) fail(Err::invalid, "cosine_rates: t outside [0,1]");
    if (!(cfg.min_signal_rate > 0.0 && cfg.min_signal_rate < cfg.max_signal_rate &&
          cfg.max_signal_rate < 1.0)) {
        fail(Err::config, "cosine_rates: need 0 < min_signal_rate < max_signal_rate < 1");
    }
    const double a0 = std::acos(cfg.max_signal_rate);
    const double a1 = std::acos(cfg.min_signal_rate);
    const double angle = a0 + t * (a1 - a0);
    return DiffusionRates{t, std::cos(angle), std::sin(angle)};
}

// Closed-form forward marginal: yt = signal * y0 + noise * eps.
template <typename T>
void forward_noise(const T* y0, const T* eps, size_t n, const DiffusionRates& rates, T* yt) {
    const T s = static_cast<T>(rates.signal_rate);
    const T v = static_cast<T>(rates.noise_rate);
    for (size_t i = 0; i < n; ++i) yt[i] = s * y0[i] + v * eps[i];
}

// i.i.d. uniform draws on (0, 1].
inline std::vector<double> sample_diffusion_times(int batch, Rng& rng) {
    if (batch < 1) fail(Err::invalid, "sample_diffusion_time: batch < 1");
    std::vector<double> t(static_cast<size_t>(batch));
    for (auto& x : t) x = rng.uniform_open0();
    return t;
}

inline std::vector<double> sample_diffusion_times(int batch, uint64_t seed) {
    Rng rng(seed);
    return sample_diffusion_times(batch, rng);
}

// dims/2 frequencies geometrically spaced over [1, 1000]; sin block then cos
// block. Input is the noise variance noise_rate^2.
inline std::vector<double> sinusoidal_embedding(double x, int dims = 32) {
    if (dims < 2 || dims % 2 != 0) fail(Err::config, "sinusoidal_embedding: dims must be even");
    const int half = dims / 2;
    std::vector<double> out(static_cast<size_t>(dims));
    const double ln_lo = std::log(1.0), ln_hi = std::log(1000.0);
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    for (int i = 0; i < half; ++i) {
        double f = std::exp(ln_lo + (half > 1 ? i * (ln_hi - ln_lo) / (half - 1) : 0.0));
        out[i] = std::sin(two_pi * f * x);
        out[half + i] = std::cos(two_pi * f * x);
    }
    return out;
}

} // namespace dt::schedule
