// SPDX-License-Identifier: Apache-2.0
//
// Training losses for single-shot fitting:
//   dip:   || A f(u) - y ||^2
//   gsure: || P f(u) - x_LS ||^2 + w * div f(u)
// with the divergence estimated by Monte-Carlo probing,
//   div ~ mean_j  b_jᵀ (f(u + eps b_j) - f(u)) / eps.
// Both forward passes live on the tape, so the divergence term is
// differentiable w.r.t. the network parameters. P is applied in closed form
// as AᴴA, which is exact for the masked-unitary and inpainting operators.
//
// Probe distribution matters for unbiasedness. The effective input noise
// u - E[u] = Aᴴn is a degenerate Gaussian supported on range(AᴴA), so the
// gsure loss probes with b = Aᴴ(mask-supported white noise) and its penalty
// is the range-space divergence tr(J AᴴA); perturbing u outside the range
// would count Jacobian directions the noise never excites and bias the
// estimate. The standalone mc_divergence keeps plain white probes and
// estimates the full trace tr(J).
#pragma once

#include <cstdint>
#include <vector>

#include "suredip/autodiff/graph.hpp"
#include "suredip/core/rng.hpp"
#include "suredip/operators/cg.hpp"
#include "suredip/operators/linear_operator.hpp"

namespace suredip {

enum class DivWeightMode {
    TwoSigmaSq,  // 2 sigma^2: recovers the pure data term as sigma -> 0
    LiteralTwo,  // the weight exactly as printed in the loss definition
};

struct GsureConfig {
    double sigma = 0.01;
    double eps = 0.0;  // MC perturbation step; <= 0 selects 1e-3 * max|u|
    int probes = 1;
    std::uint64_t probe_seed = 0;
    CgConfig cg;
    DivWeightMode weight_mode = DivWeightMode::TwoSigmaSq;
    double weight_scale = 1.0;  // override hook; 0 disables the divergence term

    double divergence_weight() const {
        const double base = weight_mode == DivWeightMode::TwoSigmaSq ? 2.0 * sigma * sigma : 2.0;
        return weight_scale * base;
    }

    double resolve_eps(const Tensor& u) const {
        if (eps > 0.0) return eps;
        const double m = max_abs(u);
        return 1e-3 * (m > 0.0 ? m : 1.0);
    }

    void validate() const {
        if (sigma < 0.0) throw ConfigError("GsureConfig: sigma must be >= 0", "gsure.sigma");
        if (probes < 1) throw ConfigError("GsureConfig: probes must be >= 1", "gsure.probes");
        if (weight_scale < 0.0)
            throw ConfigError("GsureConfig: weight_scale must be >= 0", "gsure.weight_scale");
        cg.validate();
    }
};

// Handles into a loss tape: enough to replay it across epochs (set_value on
// the probe leaves + parameter leaves, recompute, backward on `loss`).
struct LossParts {
    Var loss;
    Var data_term;
    Var divergence;  // invalid for the dip loss
    Var xhat;
    Var u_in;
    std::vector<Var> probe_vars;
    double eps = 0.0;
};

template <typename Fwd>
LossParts build_dip_loss(Graph& g, Fwd&& forward, const LinearOperator& op, const Tensor& u,
                         const Tensor& y) {
    LossParts parts;
    parts.u_in = g.input(u);
    parts.xhat = forward(g, parts.u_in);
    Var residual = g.sub(g.lin_apply(op, parts.xhat), g.constant(y));
    parts.loss = g.sumsq(residual);
    parts.data_term = parts.loss;
    return parts;
}

// Measurement-domain probe mapped back through the adjoint: white noise on
// the sampled locations, regridded. Its covariance is AᴴA, the covariance
// of the effective input noise.
inline Tensor gsure_probe(const LinearOperator& op, Rng& rng) {
    Tensor e = rng.normal_tensor({2, op.height(), op.width()});
    const Tensor& mask = op.mask();
    const std::size_t hw = op.height() * op.width();
    for (std::size_t i = 0; i < hw; ++i) {
        e[i] *= mask[i];
        e[hw + i] *= mask[i];
    }
    return op.adjoint(e);
}

// Divergence sub-tape rooted at an existing input var. Probes are drawn
// from `seed` up front via probe_fn; the trainer re-seeds them per epoch
// via set_value.
template <typename Fwd, typename ProbeFn>
Var build_mc_divergence(Graph& g, Fwd&& forward, Var u_in, Var xhat, double eps, int probes,
                        std::uint64_t seed, std::vector<Var>& probe_vars, ProbeFn&& probe_fn) {
    Rng rng(seed);
    Var acc;
    for (int j = 0; j < probes; ++j) {
        Var b = g.constant(probe_fn(rng));
        probe_vars.push_back(b);
        Var u_pert = g.add(u_in, g.scale_const(b, eps));
        Var x_pert = forward(g, u_pert);
        Var est = g.scale_const(g.dot(b, g.sub(x_pert, xhat)), 1.0 / eps);
        acc = j == 0 ? est : g.add(acc, est);
    }
    return probes == 1 ? acc : g.scale_const(acc, 1.0 / static_cast<double>(probes));
}

template <typename Fwd>
LossParts build_gsure_loss(Graph& g, Fwd&& forward, const LinearOperator& op, const Tensor& u,
                           const Tensor& x_ls, const GsureConfig& cfg, std::uint64_t probe_seed) {
    cfg.validate();
    LossParts parts;
    parts.eps = cfg.resolve_eps(u);
    parts.u_in = g.input(u);
    parts.xhat = forward(g, parts.u_in);
    Var projected = g.lin_adjoint(op, g.lin_apply(op, parts.xhat));
    parts.data_term = g.sumsq(g.sub(projected, g.constant(x_ls)));
    parts.divergence =
        build_mc_divergence(g, forward, parts.u_in, parts.xhat, parts.eps, cfg.probes,
                            probe_seed, parts.probe_vars,
                            [&op](Rng& rng) { return gsure_probe(op, rng); });
    parts.loss = g.add(parts.data_term,
                       g.scale_const(parts.divergence, cfg.divergence_weight()));
    return parts;
}

// ---- one-shot evaluations ----

struct LossResult {
    double value = 0.0;
    double data_term = 0.0;
    double divergence = 0.0;
    Tensor param_grad;  // flat, length n_params
};

template <typename Fwd>
LossResult dip_loss(Fwd&& forward, const LinearOperator& op, const Tensor& u, const Tensor& y,
                    std::size_t n_params) {
    Graph g;
    LossParts parts = build_dip_loss(g, forward, op, u, y);
    g.backward(parts.loss);
    LossResult r;
    r.value = g.scalar_value(parts.loss);
    r.data_term = r.value;
    r.param_grad = g.flat_param_grad(n_params);
    return r;
}

template <typename Fwd>
double mc_divergence(Fwd&& forward, const Tensor& u, const GsureConfig& cfg) {
    cfg.validate();
    Graph g;
    Var u_in = g.input(u);
    Var xhat = forward(g, u_in);
    std::vector<Var> probe_vars;
    const std::vector<std::size_t> shape = u.shape();
    Var div = build_mc_divergence(g, forward, u_in, xhat, cfg.resolve_eps(u), cfg.probes,
                                  cfg.probe_seed, probe_vars,
                                  [&shape](Rng& rng) { return rng.normal_tensor(shape); });
    return g.scalar_value(div);
}

// Range-space divergence estimate with operator-shaped probes, the same
// estimator the gsure loss penalizes.
template <typename Fwd>
double mc_divergence(Fwd&& forward, const Tensor& u, const LinearOperator& op,
                     const GsureConfig& cfg) {
    cfg.validate();
    Graph g;
    Var u_in = g.input(u);
    Var xhat = forward(g, u_in);
    std::vector<Var> probe_vars;
    Var div = build_mc_divergence(g, forward, u_in, xhat, cfg.resolve_eps(u), cfg.probes,
                                  cfg.probe_seed, probe_vars,
                                  [&op](Rng& rng) { return gsure_probe(op, rng); });
    return g.scalar_value(div);
}

template <typename Fwd>
LossResult gsure_loss(Fwd&& forward, const LinearOperator& op, const Tensor& y,
                      const GsureConfig& cfg, std::size_t n_params) {
    Tensor u = op.adjoint(y);
    Tensor x_ls = least_squares_image(op, y, cfg.cg);
    Graph g;
    LossParts parts = build_gsure_loss(g, forward, op, u, x_ls, cfg, cfg.probe_seed);
    g.backward(parts.loss);
    LossResult r;
    r.value = g.scalar_value(parts.loss);
    r.data_term = g.scalar_value(parts.data_term);
    r.divergence = g.scalar_value(parts.divergence);
    r.param_grad = g.flat_param_grad(n_params);
    return r;
}

// ---- evaluation-only oracles (require ground truth) ----

inline double mse_oracle(const Tensor& xhat, const Tensor& x) {
    check_same_shape(xhat, x, "mse_oracle");
    Tensor d = sub(xhat, x);
    return dot(d, d);
}

// ||P(xhat - x)||^2 via the closed-form projector AᴴA.
inline double pmse_oracle(const Tensor& xhat, const Tensor& x, const LinearOperator& op) {
    check_same_shape(xhat, x, "pmse_oracle");
    Tensor pd = op.normal(sub(xhat, x));
    return dot(pd, pd);
}

// Same quantity through the CG projection path.
inline double pmse_oracle(const Tensor& xhat, const Tensor& x, const LinearOperator& op,
                          const CgConfig& cfg) {
    check_same_shape(xhat, x, "pmse_oracle");
    Tensor pd = project(op, sub(xhat, x), cfg);
    return dot(pd, pd);
}

}  // namespace suredip
