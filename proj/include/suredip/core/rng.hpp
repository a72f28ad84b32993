// SPDX-License-Identifier: Apache-2.0
//
// Seeded RNG with pinned output mapping. std::normal_distribution is
// implementation-defined, so the Gaussian path is an explicit Box-Muller on
// top of mt19937_64: identical seeds give identical streams everywhere.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "suredip/core/tensor.hpp"

namespace suredip {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; caches the sine mate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    Tensor normal_tensor(const std::vector<std::size_t>& shape) {
        Tensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal();
        return t;
    }

    Tensor uniform_tensor(const std::vector<std::size_t>& shape, double lo, double hi) {
        Tensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
        return t;
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace suredip
