#pragma once

#include <utility>

#include "core/error.hpp"
#include "core/nn/tensor.hpp"
#include "core/schedule.hpp"

namespace dt::sampler {

struct SamplerConfig {
    int steps = 50;
    schedule::ScheduleConfig sched;
};

// One deterministic DDIM update. Returns (y0_pred, y_prev):
//   y0_pred = (yt - noise_rate(t) * eps_hat) / signal_rate(t)
//   y_prev  = signal_rate(t_prev) * y0_pred + noise_rate(t_prev) * eps_hat
template <typename T>
void ddim_step(const T* yt, const T* eps_hat, size_t n, double t, double t_prev,
               const schedule::ScheduleConfig& cfg, T* y0_pred, T* y_prev) {
    if (t_prev > t) fail(Err::invalid, "ddim_step: t_prev > t");
    const auto rt = schedule::cosine_rates(t, cfg);
    const auto rp = schedule::cosine_rates(t_prev, cfg);
    const T inv_s = static_cast<T>(1.0 / rt.signal_rate);
    const T nr = static_cast<T>(rt.noise_rate);
    const T sp = static_cast<T>(rp.signal_rate);
    const T np = static_cast<T>(rp.noise_rate);
    for (size_t i = 0; i < n; ++i) {
        T y0 = (yt[i] - nr * eps_hat[i]) * inv_s;
        y0_pred[i] = y0;
        y_prev[i] = sp * y0 + np * eps_hat[i];
    }
}

// Full reverse loop over the uniform grid t = i/T, i = T..1. `predict` maps
// (yt, x_cond, t) to a noise estimate of matching shape. Deterministic given
// the initial noise and a deterministic predictor; returns the final y0_pred.
template <typename T, typename Predict>
nn::Tensor<T> sample(Predict&& predict, const nn::Tensor<T>& x_cond, const nn::Tensor<T>& noise,
                     const SamplerConfig& cfg) {
    if (cfg.steps < 1) fail(Err::config, "sample: steps < 1");
    if (!noise.same_shape(x_cond)) fail(Err::invalid, "sample: noise/conditioning shape mismatch");

    nn::Tensor<T> yt = noise;
    nn::Tensor<T> y0_pred(yt.n, yt.c, yt.h, yt.w);
    nn::Tensor<T> y_prev(yt.n, yt.c, yt.h, yt.w);
    for (int i = cfg.steps; i >= 1; --i) {
        const double t = static_cast<double>(i) / cfg.steps;
        const double t_prev = static_cast<double>(i - 1) / cfg.steps;
        nn::Tensor<T> eps_hat = predict(yt, x_cond, t);
        if (!eps_hat.same_shape(yt)) fail(Err::invalid, "sample: predictor shape mismatch");
        ddim_step(yt.data.data(), eps_hat.data.data(), yt.size(), t, t_prev, cfg.sched,
                  y0_pred.data.data(), y_prev.data.data());
        std::swap(yt, y_prev);
    }
    return y0_pred;
}

} // namespace dt::sampler
