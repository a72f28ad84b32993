// SPDX-License-Identifier: Apache-2.0
//
// Orthonormal 2-D Haar transform, full pyramid, per channel. Extents must
// be powers of two. W is orthonormal: Wᴴ(Wx) = x and ||Wx|| = ||x||.
#pragma once

#include <vector>

#include "suredip/core/tensor.hpp"

namespace suredip {

namespace detail {

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

// One analysis level over the leading nh x nw block of a [h,w] plane.
inline void haar_level_forward(double* p, std::size_t w, std::size_t nh, std::size_t nw) {
    std::vector<double> tmp(std::max(nh, nw));
    for (std::size_t y = 0; y < nh; ++y) {
        double* row = p + y * w;
        for (std::size_t x = 0; x < nw / 2; ++x) {
            tmp[x] = (row[2 * x] + row[2 * x + 1]) * kInvSqrt2;
            tmp[nw / 2 + x] = (row[2 * x] - row[2 * x + 1]) * kInvSqrt2;
        }
        for (std::size_t x = 0; x < nw; ++x) row[x] = tmp[x];
    }
    for (std::size_t x = 0; x < nw; ++x) {
        for (std::size_t y = 0; y < nh / 2; ++y) {
            tmp[y] = (p[2 * y * w + x] + p[(2 * y + 1) * w + x]) * kInvSqrt2;
            tmp[nh / 2 + y] = (p[2 * y * w + x] - p[(2 * y + 1) * w + x]) * kInvSqrt2;
        }
        for (std::size_t y = 0; y < nh; ++y) p[y * w + x] = tmp[y];
    }
}

inline void haar_level_inverse(double* p, std::size_t w, std::size_t nh, std::size_t nw) {
    std::vector<double> tmp(std::max(nh, nw));
    for (std::size_t x = 0; x < nw; ++x) {
        for (std::size_t y = 0; y < nh / 2; ++y) {
            const double a = p[y * w + x], d = p[(nh / 2 + y) * w + x];
            tmp[2 * y] = (a + d) * kInvSqrt2;
            tmp[2 * y + 1] = (a - d) * kInvSqrt2;
        }
        for (std::size_t y = 0; y < nh; ++y) p[y * w + x] = tmp[y];
    }
    for (std::size_t y = 0; y < nh; ++y) {
        double* row = p + y * w;
        for (std::size_t x = 0; x < nw / 2; ++x) {
            const double a = row[x], d = row[nw / 2 + x];
            tmp[2 * x] = (a + d) * kInvSqrt2;
            tmp[2 * x + 1] = (a - d) * kInvSqrt2;
        }
        for (std::size_t x = 0; x < nw; ++x) row[x] = tmp[x];
    }
}

}  // namespace detail

inline void check_haar_shape(const Tensor& x) {
    if (x.rank() != 3 || x.extent(0) != 2)
        throw ShapeError("haar: need [2,H,W], got " + x.shape_str());
    if (!detail::is_pow2(x.extent(1)) || !detail::is_pow2(x.extent(2)))
        throw ShapeError("haar: extents must be powers of two, got " + x.shape_str());
}

inline Tensor haar_forward(const Tensor& x) {
    check_haar_shape(x);
    Tensor c = x;
    const std::size_t h = x.extent(1), w = x.extent(2);
    for (std::size_t ch = 0; ch < 2; ++ch) {
        double* p = c.data() + ch * h * w;
        std::size_t nh = h, nw = w;
        while (nh >= 2 && nw >= 2) {
            detail::haar_level_forward(p, w, nh, nw);
            nh /= 2;
            nw /= 2;
        }
    }
    return c;
}

inline Tensor haar_inverse(const Tensor& c) {
    check_haar_shape(c);
    Tensor x = c;
    const std::size_t h = c.extent(1), w = c.extent(2);
    // Count levels, then synthesize coarsest-first.
    std::size_t levels = 0;
    {
        std::size_t nh = h, nw = w;
        while (nh >= 2 && nw >= 2) {
            ++levels;
            nh /= 2;
            nw /= 2;
        }
    }
    for (std::size_t ch = 0; ch < 2; ++ch) {
        double* p = x.data() + ch * h * w;
        for (std::size_t l = levels; l > 0; --l) {
            const std::size_t nh = h >> (l - 1), nw = w >> (l - 1);
            detail::haar_level_inverse(p, w, nh, nw);
        }
    }
    return x;
}

}  // namespace suredip
