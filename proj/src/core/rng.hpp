#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dt {

// Deterministic random source. mt19937 output is fixed by the standard, but the
// <random> distributions are not, so every mapping from raw draws to values is
// spelled out here. Identical seeds give bit-identical streams on any platform.
class Rng {
public:
    explicit Rng(uint64_t seed)
        : gen_(static_cast<uint32_t>(seed & 0xffffffffu) ^
               static_cast<uint32_t>(seed >> 32)) {}

    uint32_t next_u32() { return gen_(); }

    // [0, 1)
    double uniform01() {
        return static_cast<double>(gen_()) * (1.0 / 4294967296.0);
    }

    // [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // (0, 1]
    double uniform_open0() { return 1.0 - uniform01(); }

    // inclusive integer range, Lemire reduction
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>((static_cast<uint64_t>(gen_()) * span) >> 32);
    }

    // standard normal, Box-Muller with the second value cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open0();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace dt
