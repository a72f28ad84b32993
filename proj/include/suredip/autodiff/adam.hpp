// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "suredip/core/tensor.hpp"

namespace suredip {

// Adam with bias correction. Moment tensors shape-match the parameter they
// track; the step counter is strictly increasing.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Tensor m;
    Tensor v;
    std::int64_t step = 0;

    explicit AdamState(const std::vector<std::size_t>& param_shape, double lr = 1e-3,
                       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr(lr), beta1(beta1), beta2(beta2), eps(eps), m(param_shape), v(param_shape) {}
};

inline void adam_step(AdamState& st, const Tensor& grad, Tensor& param) {
    check_same_shape(grad, param, "adam_step");
    check_same_shape(st.m, param, "adam_step moments");
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        param[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

}  // namespace suredip
