// SPDX-License-Identifier: Apache-2.0
//
// Classical single-shot comparison reconstructions:
//   tv         — ADMM on ||Ax-y||^2 + mu*(|Dh x|_1 + |Dv x|_1), anisotropic
//                circular finite differences, CG for the quadratic step;
//   wavelet_l1 — ISTA on ||Ax-y||^2 + mu*||Wx||_1 with orthonormal Haar W;
//                the (1/2)-scaled gradient step x - Aᴴ(Ax-y) pairs with a
//                mu/2 threshold, which is exact one-step for denoising and
//                monotone since ||AᴴA|| <= 1.
#pragma once

#include <cmath>
#include <vector>

#include "suredip/baselines/haar.hpp"
#include "suredip/operators/cg.hpp"
#include "suredip/operators/linear_operator.hpp"

namespace suredip {

enum class BaselineMethod { Tv, WaveletL1 };

struct BaselineConfig {
    BaselineMethod method = BaselineMethod::Tv;
    double reg_weight = 1e-3;
    int iters = 100;
    double rho = 1.0;  // ADMM penalty (tv only)
    CgConfig cg;

    void validate() const {
        if (reg_weight < 0.0)
            throw ConfigError("BaselineConfig: reg_weight must be >= 0", "baseline.reg_weight");
        if (iters < 1) throw ConfigError("BaselineConfig: iters must be >= 1", "baseline.iters");
        if (rho <= 0.0) throw ConfigError("BaselineConfig: rho must be > 0", "baseline.rho");
    }
};

struct BaselineResult {
    Tensor image;
    std::vector<double> objective;        // per outer iteration
    std::vector<double> primal_residual;  // tv only: ||Dx - d||
};

namespace detail {

// Circular horizontal/vertical forward differences and their adjoints,
// applied per channel of a [2,H,W] tensor.
inline Tensor diff_h(const Tensor& x) {
    const std::size_t h = x.extent(1), w = x.extent(2);
    Tensor r(x.shape());
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < h; ++y) {
            const double* row = x.data() + (c * h + y) * w;
            double* out = r.data() + (c * h + y) * w;
            for (std::size_t j = 0; j < w; ++j) out[j] = row[(j + 1) % w] - row[j];
        }
    return r;
}

inline Tensor diff_h_adj(const Tensor& v) {
    const std::size_t h = v.extent(1), w = v.extent(2);
    Tensor r(v.shape());
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < h; ++y) {
            const double* row = v.data() + (c * h + y) * w;
            double* out = r.data() + (c * h + y) * w;
            for (std::size_t j = 0; j < w; ++j) out[j] = row[(j + w - 1) % w] - row[j];
        }
    return r;
}

inline Tensor diff_v(const Tensor& x) {
    const std::size_t h = x.extent(1), w = x.extent(2);
    Tensor r(x.shape());
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < h; ++y) {
            const double* cur = x.data() + (c * h + y) * w;
            const double* nxt = x.data() + (c * h + (y + 1) % h) * w;
            double* out = r.data() + (c * h + y) * w;
            for (std::size_t j = 0; j < w; ++j) out[j] = nxt[j] - cur[j];
        }
    return r;
}

inline Tensor diff_v_adj(const Tensor& v) {
    const std::size_t h = v.extent(1), w = v.extent(2);
    Tensor r(v.shape());
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < h; ++y) {
            const double* cur = v.data() + (c * h + y) * w;
            const double* prv = v.data() + (c * h + (y + h - 1) % h) * w;
            double* out = r.data() + (c * h + y) * w;
            for (std::size_t j = 0; j < w; ++j) out[j] = prv[j] - cur[j];
        }
    return r;
}

inline void soft_threshold(Tensor& t, double thresh) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double v = t[i];
        const double m = std::abs(v) - thresh;
        t[i] = m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
    }
}

inline double l1_norm(const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += std::abs(t[i]);
    return s;
}

inline double data_fidelity(const LinearOperator& op, const Tensor& x, const Tensor& y) {
    Tensor r = sub(op.apply(x), y);
    return dot(r, r);
}

}  // namespace detail

inline double tv_objective(const LinearOperator& op, const Tensor& x, const Tensor& y,
                           double mu) {
    return detail::data_fidelity(op, x, y) +
           mu * (detail::l1_norm(detail::diff_h(x)) + detail::l1_norm(detail::diff_v(x)));
}

inline double wavelet_objective(const LinearOperator& op, const Tensor& x, const Tensor& y,
                                double mu) {
    return detail::data_fidelity(op, x, y) + mu * detail::l1_norm(haar_forward(x));
}

inline BaselineResult tv_recon(const LinearOperator& op, const Tensor& y,
                               const BaselineConfig& cfg) {
    cfg.validate();
    const double mu = cfg.reg_weight;
    const double rho = cfg.rho;
    Tensor x(y.shape());
    Tensor dh(y.shape()), dv(y.shape());  // split variables
    Tensor uh(y.shape()), uv(y.shape());  // scaled duals

    BaselineResult res;
    res.objective.reserve(static_cast<std::size_t>(cfg.iters));
    for (int it = 0; it < cfg.iters; ++it) {
        // x-step: (2AᴴA + rho DᵀD) x = 2Aᴴy + rho (Dhᵀ(dh-uh) + Dvᵀ(dv-uv))
        Tensor rhs = scale(op.adjoint(y), 2.0);
        axpy(rho, detail::diff_h_adj(sub(dh, uh)), rhs);
        axpy(rho, detail::diff_v_adj(sub(dv, uv)), rhs);
        x = conjugate_gradient(
            [&](const Tensor& v) {
                Tensor r = scale(op.normal(v), 2.0);
                axpy(rho, detail::diff_h_adj(detail::diff_h(v)), r);
                axpy(rho, detail::diff_v_adj(detail::diff_v(v)), r);
                return r;
            },
            rhs, cfg.cg.tol, cfg.cg.max_iter);

        Tensor gh = detail::diff_h(x);
        Tensor gv = detail::diff_v(x);

        // d-step: shrink(Dx + u, mu/rho)
        dh = add(gh, uh);
        dv = add(gv, uv);
        detail::soft_threshold(dh, mu / rho);
        detail::soft_threshold(dv, mu / rho);

        // dual update
        uh = add(uh, sub(gh, dh));
        uv = add(uv, sub(gv, dv));

        res.objective.push_back(tv_objective(op, x, y, mu));
        Tensor ph = sub(gh, dh);
        Tensor pv = sub(gv, dv);
        res.primal_residual.push_back(std::sqrt(dot(ph, ph) + dot(pv, pv)));
    }
    res.image = std::move(x);
    return res;
}

inline BaselineResult wavelet_l1_recon(const LinearOperator& op, const Tensor& y,
                                       const BaselineConfig& cfg) {
    cfg.validate();
    check_haar_shape(y);
    const double mu = cfg.reg_weight;
    Tensor x(y.shape());
    BaselineResult res;
    res.objective.reserve(static_cast<std::size_t>(cfg.iters));
    for (int it = 0; it < cfg.iters; ++it) {
        Tensor grad_half = op.adjoint(sub(op.apply(x), y));  // (1/2) of the objective gradient
        Tensor z = sub(x, grad_half);
        Tensor c = haar_forward(z);
        detail::soft_threshold(c, mu / 2.0);
        x = haar_inverse(c);
        res.objective.push_back(wavelet_objective(op, x, y, mu));
    }
    res.image = std::move(x);
    return res;
}

}  // namespace suredip
