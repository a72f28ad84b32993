// SPDX-License-Identifier: Apache-2.0
//
// Undersampling masks: 2-D variable-density random, 1-D Cartesian lines,
// and full sampling. The sampled count is corrected to exactly
// round(HW/acceleration) by seeded random add/remove, so the sampled
// fraction always sits within the +-2% contract.
#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "suredip/core/rng.hpp"
#include "suredip/core/tensor.hpp"

namespace suredip {

enum class MaskKind { Vd2d, Cartesian1d, Full };

struct MaskSpec {
    MaskKind kind = MaskKind::Vd2d;
    double acceleration = 4.0;
    std::size_t calib = 8;  // fully sampled center extent (block for vd2d, lines for 1d)
    std::uint64_t seed = 0;
};

namespace detail {

// Variable-density weight (1-r)^3 with r the normalized distance from the
// grid center; zero beyond r = 1.
inline double vd_weight(double r) {
    if (r >= 1.0) return 0.0;
    const double t = 1.0 - r;
    return t * t * t;
}

inline void correct_count(std::vector<char>& sel, const std::vector<char>& frozen,
                          std::size_t target, Rng& rng) {
    std::size_t have = 0;
    for (char s : sel) have += s != 0;
    // Candidate pools are scanned in index order; picks are seeded-uniform.
    while (have != target) {
        const bool need_add = have < target;
        std::vector<std::size_t> pool;
        pool.reserve(sel.size());
        for (std::size_t i = 0; i < sel.size(); ++i) {
            if (frozen[i]) continue;
            if (need_add ? sel[i] == 0 : sel[i] != 0) pool.push_back(i);
        }
        if (pool.empty()) break;
        // Consume the pool in random order until the count is met.
        for (std::size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i))]);
        for (std::size_t idx : pool) {
            if (have == target) break;
            sel[idx] = need_add ? 1 : 0;
            have += need_add ? 1 : std::size_t(-1);
        }
    }
}

}  // namespace detail

inline Tensor make_mask(const MaskSpec& spec, std::size_t height, std::size_t width) {
    if (spec.acceleration < 1.0)
        throw ConfigError("make_mask: acceleration must be >= 1", "mask.acceleration");
    Tensor mask({height, width});
    if (spec.kind == MaskKind::Full || spec.acceleration == 1.0) {
        mask.fill(1.0);
        return mask;
    }

    Rng rng(spec.seed);
    const double cy = (static_cast<double>(height) - 1.0) / 2.0;
    const double cx = (static_cast<double>(width) - 1.0) / 2.0;

    if (spec.kind == MaskKind::Vd2d) {
        const std::size_t target =
            static_cast<std::size_t>(std::llround(static_cast<double>(height * width) / spec.acceleration));
        const std::size_t c = std::min({spec.calib, height, width});
        const std::size_t y0 = (height - c) / 2, x0 = (width - c) / 2;
        std::vector<char> frozen(height * width, 0), sel(height * width, 0);
        for (std::size_t y = y0; y < y0 + c; ++y)
            for (std::size_t x = x0; x < x0 + c; ++x) {
                frozen[y * width + x] = 1;
                sel[y * width + x] = 1;
            }
        if (c * c > target)
            throw ConfigError("make_mask: calibration region exceeds the sample budget",
                              "mask.calib");
        // Bernoulli pass calibrated so the expected count hits the target.
        double wsum = 0.0;
        std::vector<double> w(height * width, 0.0);
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                if (frozen[y * width + x]) continue;
                const double ry = (static_cast<double>(y) - cy) / (static_cast<double>(height) / 2.0);
                const double rx = (static_cast<double>(x) - cx) / (static_cast<double>(width) / 2.0);
                const double wv = detail::vd_weight(std::sqrt(rx * rx + ry * ry));
                w[y * width + x] = wv;
                wsum += wv;
            }
        const double remaining = static_cast<double>(target - c * c);
        const double kappa = wsum > 0.0 ? remaining / wsum : 0.0;
        for (std::size_t i = 0; i < sel.size(); ++i) {
            if (frozen[i]) continue;
            const double p = std::min(1.0, kappa * w[i]);
            if (rng.uniform() < p) sel[i] = 1;
        }
        detail::correct_count(sel, frozen, target, rng);
        for (std::size_t i = 0; i < sel.size(); ++i) mask[i] = sel[i] ? 1.0 : 0.0;
        return mask;
    }

    // Cartesian 1-D: whole columns, denser near the center column.
    const std::size_t target_lines =
        static_cast<std::size_t>(std::llround(static_cast<double>(width) / spec.acceleration));
    const std::size_t c = std::min(spec.calib, width);
    const std::size_t x0 = (width - c) / 2;
    if (c > target_lines)
        throw ConfigError("make_mask: calibration lines exceed the line budget", "mask.calib");
    std::vector<char> frozen(width, 0), sel(width, 0);
    for (std::size_t x = x0; x < x0 + c; ++x) {
        frozen[x] = 1;
        sel[x] = 1;
    }
    double wsum = 0.0;
    std::vector<double> w(width, 0.0);
    for (std::size_t x = 0; x < width; ++x) {
        if (frozen[x]) continue;
        const double rx = std::abs(static_cast<double>(x) - cx) / (static_cast<double>(width) / 2.0);
        w[x] = detail::vd_weight(rx);
        wsum += w[x];
    }
    const double kappa = wsum > 0.0 ? static_cast<double>(target_lines - c) / wsum : 0.0;
    for (std::size_t x = 0; x < width; ++x) {
        if (frozen[x]) continue;
        if (rng.uniform() < std::min(1.0, kappa * w[x])) sel[x] = 1;
    }
    detail::correct_count(sel, frozen, target_lines, rng);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) mask[y * width + x] = sel[x] ? 1.0 : 0.0;
    return mask;
}

}  // namespace suredip
