// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "suredip/core/rng.hpp"
#include "suredip/operators/linear_operator.hpp"
#include "suredip/simdata/phantom.hpp"

namespace suredip {

// y = A x + n with i.i.d. Gaussian noise of per-component std sigma added
// only at sampled locations (real then imaginary, row-major order).
inline Tensor measure(const Phantom& phantom, const LinearOperator& op, double sigma,
                      std::uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("measure: sigma must be >= 0", "sigma");
    Tensor y = op.apply(phantom.image);
    if (sigma == 0.0) return y;
    Rng rng(seed);
    const Tensor& mask = op.mask();
    const std::size_t hw = op.height() * op.width();
    double* re = y.data();
    double* im = y.data() + hw;
    for (std::size_t i = 0; i < hw; ++i) {
        if (mask[i] == 0.0) continue;
        re[i] += sigma * rng.normal();
        im[i] += sigma * rng.normal();
    }
    return y;
}

// 10*log10(peak^2 / MSE) with the MSE taken over both channels. Exact
// reconstructions return the documented 200 dB cap.
inline double psnr(const Tensor& xhat, const Phantom& truth) {
    check_same_shape(xhat, truth.image, "psnr");
    double se = 0.0;
    for (std::size_t i = 0; i < xhat.size(); ++i) {
        const double d = xhat[i] - truth.image[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(xhat.size());
    if (mse == 0.0) return 200.0;
    return 10.0 * std::log10(truth.peak * truth.peak / mse);
}

}  // namespace suredip
