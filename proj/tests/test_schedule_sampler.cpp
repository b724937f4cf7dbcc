#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "core/sampler.hpp"
#include "core/schedule.hpp"

using namespace dt;
using schedule::cosine_rates;

namespace {

template <typename T>
nn::Tensor<T> random_tensor(int h, int w, uint64_t seed, bool normal = true) {
    nn::Tensor<T> t(1, 1, h, w);
    Rng rng(seed);
    for (auto& v : t.data) {
        v = static_cast<T>(normal ? rng.normal() : rng.uniform(-1.0, 1.0));
    }
    return t;
}

} // namespace

TEST_CASE("cosine_rates: clamp endpoints") {
    auto r0 = cosine_rates(0.0);
    CHECK(r0.signal_rate == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(r0.noise_rate == doctest::Approx(std::sqrt(1.0 - 0.95 * 0.95)).epsilon(1e-12));
    CHECK(r0.noise_rate == doctest::Approx(0.31225).epsilon(1e-4));
    auto r1 = cosine_rates(1.0);
    CHECK(r1.signal_rate == doctest::Approx(0.02).epsilon(1e-9));
}

TEST_CASE("cosine_rates: variance preservation and monotonicity on a 1000-point grid") {
    double prev_signal = 2.0;
    for (int i = 0; i <= 1000; ++i) {
        double t = static_cast<double>(i) / 1000.0;
        auto r = cosine_rates(t);
        CHECK(std::abs(r.signal_rate * r.signal_rate + r.noise_rate * r.noise_rate - 1.0) < 1e-6);
        CHECK(r.signal_rate < prev_signal);
        CHECK(r.signal_rate > 0.0);
        CHECK(r.noise_rate > 0.0);
        prev_signal = r.signal_rate;
    }
}

TEST_CASE("cosine_rates: domain and config validation") {
    CHECK_THROWS_AS(cosine_rates(-0.01), Error);
    CHECK_THROWS_AS(cosine_rates(1.01), Error);
    schedule::ScheduleConfig bad;
    bad.min_signal_rate = 0.99;
    CHECK_THROWS_AS(cosine_rates(0.5, bad), Error);
}

TEST_CASE("forward_noise: closed-form marginal") {
    schedule::DiffusionRates r{0.5, 0.6, 0.8};
    double y0 = 1.0, eps = 1.0, yt = 0.0;
    schedule::forward_noise(&y0, &eps, 1, r, &yt);
    CHECK(yt == doctest::Approx(1.4));

    auto y = random_tensor<double>(16, 16, 7);
    auto e = random_tensor<double>(16, 16, 8);
    nn::Tensor<double> out(1, 1, 16, 16);
    schedule::DiffusionRates r2 = cosine_rates(0.3);

    // eps = 0 -> signal * y0
    nn::Tensor<double> zero(1, 1, 16, 16);
    schedule::forward_noise(y.data.data(), zero.data.data(), y.size(), r2, out.data.data());
    for (size_t i = 0; i < y.size(); ++i) {
        CHECK(out.data[i] == doctest::Approx(r2.signal_rate * y.data[i]));
    }
    // y0 = 0 -> noise * eps
    schedule::forward_noise(zero.data.data(), e.data.data(), e.size(), r2, out.data.data());
    for (size_t i = 0; i < e.size(); ++i) {
        CHECK(out.data[i] == doctest::Approx(r2.noise_rate * e.data[i]));
    }
    // linearity in y0
    nn::Tensor<double> y2 = y, out2(1, 1, 16, 16);
    for (auto& v : y2.data) v *= 3.0;
    schedule::forward_noise(y.data.data(), e.data.data(), y.size(), r2, out.data.data());
    schedule::forward_noise(y2.data.data(), e.data.data(), y.size(), r2, out2.data.data());
    for (size_t i = 0; i < y.size(); ++i) {
        double lin = 3.0 * out.data[i] - 2.0 * r2.noise_rate * e.data[i];
        CHECK(out2.data[i] == doctest::Approx(lin).epsilon(1e-9));
    }
}

TEST_CASE("forward_noise: unit variance is preserved (Monte Carlo)") {
    Rng rng(123);
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double t = rng.uniform_open0();
        auto r = cosine_rates(t);
        double y0 = rng.normal(), eps = rng.normal(), yt;
        schedule::forward_noise(&y0, &eps, 1, r, &yt);
        sum += yt;
        sumsq += yt * yt;
    }
    double var = sumsq / n - (sum / n) * (sum / n);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("sample_diffusion_time: determinism, range, mean") {
    auto a = schedule::sample_diffusion_times(4, uint64_t(99));
    auto b = schedule::sample_diffusion_times(4, uint64_t(99));
    CHECK(a == b);

    auto big = schedule::sample_diffusion_times(10000, uint64_t(5));
    double mean = 0.0;
    for (double t : big) {
        CHECK(t > 0.0);
        CHECK(t <= 1.0);
        mean += t;
    }
    mean /= static_cast<double>(big.size());
    CHECK(std::abs(mean - 0.5) < 0.02);

    CHECK_THROWS_AS(schedule::sample_diffusion_times(0, uint64_t(1)), Error);
}

TEST_CASE("sinusoidal_embedding: shape, identity, separation") {
    auto e = schedule::sinusoidal_embedding(0.25);
    REQUIRE(e.size() == 32);
    for (int i = 0; i < 16; ++i) {
        CHECK(e[i] * e[i] + e[16 + i] * e[16 + i] == doctest::Approx(1.0).epsilon(1e-12));
    }
    auto e1 = schedule::sinusoidal_embedding(0.1);
    auto e2 = schedule::sinusoidal_embedding(0.9);
    double d2 = 0.0;
    for (size_t i = 0; i < e1.size(); ++i) d2 += (e1[i] - e2[i]) * (e1[i] - e2[i]);
    CHECK(std::sqrt(d2) > 0.1);

    CHECK_THROWS_AS(schedule::sinusoidal_embedding(0.5, 7), Error);
}

TEST_CASE("ddim_step: algebraic identities") {
    auto y0 = random_tensor<float>(32, 32, 11);
    auto eps = random_tensor<float>(32, 32, 12);
    schedule::ScheduleConfig cfg;

    // with the exact forward noise, y0 comes back nearly exactly
    for (double t : {0.2, 0.5, 1.0}) {
        auto r = cosine_rates(t, cfg);
        nn::Tensor<float> yt(1, 1, 32, 32), y0p(1, 1, 32, 32), yprev(1, 1, 32, 32);
        schedule::forward_noise(y0.data.data(), eps.data.data(), y0.size(), r, yt.data.data());
        sampler::ddim_step(yt.data.data(), eps.data.data(), yt.size(), t, t / 2, cfg,
                           y0p.data.data(), yprev.data.data());
        for (size_t i = 0; i < y0.size(); ++i) {
            CHECK(std::abs(y0p.data[i] - y0.data[i]) < 1e-5);
        }
    }

    // t_prev == t is a fixed point
    {
        double t = 0.6;
        auto r = cosine_rates(t, cfg);
        nn::Tensor<float> yt(1, 1, 32, 32), y0p(1, 1, 32, 32), yprev(1, 1, 32, 32);
        schedule::forward_noise(y0.data.data(), eps.data.data(), y0.size(), r, yt.data.data());
        sampler::ddim_step(yt.data.data(), eps.data.data(), yt.size(), t, t, cfg, y0p.data.data(),
                           yprev.data.data());
        for (size_t i = 0; i < yt.size(); ++i) {
            CHECK(std::abs(yprev.data[i] - yt.data[i]) < 1e-6);
        }
    }

    // t_prev = 0 applies the clamp rates to y0_pred and eps_hat
    {
        double t = 0.8;
        auto rt = cosine_rates(t, cfg);
        auto r0 = cosine_rates(0.0, cfg);
        nn::Tensor<float> yt(1, 1, 32, 32), y0p(1, 1, 32, 32), yprev(1, 1, 32, 32);
        schedule::forward_noise(y0.data.data(), eps.data.data(), y0.size(), rt, yt.data.data());
        sampler::ddim_step(yt.data.data(), eps.data.data(), yt.size(), t, 0.0, cfg,
                           y0p.data.data(), yprev.data.data());
        for (size_t i = 0; i < yt.size(); ++i) {
            double expect = r0.signal_rate * y0p.data[i] + r0.noise_rate * eps.data[i];
            CHECK(yprev.data[i] == doctest::Approx(expect).epsilon(1e-6));
        }
    }

    {
        nn::Tensor<float> t1(1, 1, 2, 2), t2(1, 1, 2, 2), o1(1, 1, 2, 2), o2(1, 1, 2, 2);
        CHECK_THROWS_AS(sampler::ddim_step(t1.data.data(), t2.data.data(), 4, 0.3, 0.8, cfg,
                                           o1.data.data(), o2.data.data()),
                        Error);
    }
}

TEST_CASE("sample: perfect-noise oracle recovers y0 for T in {1,5,20,50}") {
    auto y0 = random_tensor<float>(128, 128, 21, /*normal=*/false);
    auto eps = random_tensor<float>(128, 128, 22);
    sampler::SamplerConfig cfg;

    // y_T is the exact forward marginal at t=1; the oracle predictor always
    // answers with the true eps
    auto r1 = cosine_rates(1.0, cfg.sched);
    nn::Tensor<float> y_t(1, 1, 128, 128);
    schedule::forward_noise(y0.data.data(), eps.data.data(), y0.size(), r1, y_t.data.data());
    auto oracle = [&](const nn::Tensor<float>&, const nn::Tensor<float>&, double) { return eps; };

    for (int steps : {1, 5, 20, 50}) {
        cfg.steps = steps;
        auto got = sampler::sample(oracle, y0 /*conditioning unused*/, y_t, cfg);
        double max_abs = 0.0;
        for (size_t i = 0; i < y0.size(); ++i) {
            max_abs = std::max(max_abs, static_cast<double>(std::abs(got.data[i] - y0.data[i])));
        }
        CHECK(max_abs < 1e-4);
    }
}

TEST_CASE("sample: determinism and shape checks") {
    auto x = random_tensor<float>(32, 32, 31);
    auto noise = random_tensor<float>(32, 32, 32);
    sampler::SamplerConfig cfg;
    cfg.steps = 5;
    // a deterministic toy predictor mixing its inputs
    auto predict = [](const nn::Tensor<float>& yt, const nn::Tensor<float>& cond, double t) {
        nn::Tensor<float> out(yt.n, yt.c, yt.h, yt.w);
        for (size_t i = 0; i < yt.size(); ++i) {
            out.data[i] = 0.5f * yt.data[i] + 0.1f * cond.data[i] + static_cast<float>(0.01 * t);
        }
        return out;
    };
    auto a = sampler::sample(predict, x, noise, cfg);
    auto b = sampler::sample(predict, x, noise, cfg);
    CHECK(a.data == b.data);
    CHECK(a.h == 32);
    CHECK(a.w == 32);

    auto bad_predict = [](const nn::Tensor<float>& yt, const nn::Tensor<float>&, double) {
        return nn::Tensor<float>(yt.n, yt.c, yt.h / 2, yt.w);
    };
    CHECK_THROWS_AS(sampler::sample(bad_predict, x, noise, cfg), Error);
    sampler::SamplerConfig zero;
    zero.steps = 0;
    CHECK_THROWS_AS(sampler::sample(predict, x, noise, zero), Error);
}
