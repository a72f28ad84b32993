// SPDX-License-Identifier: Apache-2.0
//
// Conjugate gradient on SPD systems, the range-space projector P and the
// least-squares image x_LS. project() and least_squares_image() realize the
// lambda -> 0 limit of the regularized normal equations.
#pragma once

#include <string>

#include "suredip/core/tensor.hpp"
#include "suredip/operators/linear_operator.hpp"

namespace suredip {

struct CgConfig {
    double lambda = 1e-6;
    double tol = 1e-10;
    int max_iter = 200;

    void validate() const {
        if (!(tol > 0.0)) throw ConfigError("CgConfig: tol must be > 0", "cg.tol");
        if (lambda < 0.0) throw ConfigError("CgConfig: lambda must be >= 0", "cg.lambda");
        if (max_iter < 1) throw ConfigError("CgConfig: max_iter must be >= 1", "cg.max_iter");
    }
};

// Solves M z = rhs for SPD M; returns z with ||M z - rhs|| <= tol*||rhs||.
// The zero rhs returns zero without iterating. Throws ConvergenceError with
// the final residual when max_iter is exhausted.
template <typename ApplyFn>
Tensor conjugate_gradient(ApplyFn&& M, const Tensor& rhs, double tol, int max_iter) {
    Tensor z(rhs.shape());
    const double rhs_norm = norm2(rhs);
    if (rhs_norm == 0.0) return z;

    Tensor r = rhs;
    Tensor p = rhs;
    double rs = dot(r, r);
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        if (std::sqrt(rs) <= tol * rhs_norm) break;
        Tensor mp = M(p);
        const double pmp = dot(p, mp);
        if (pmp <= 0.0) break;  // lost positivity; fall through to the residual check
        const double alpha = rs / pmp;
        axpy(alpha, p, z);
        axpy(-alpha, mp, r);
        const double rs_new = dot(r, r);
        const double beta = rs_new / rs;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        rs = rs_new;
    }

    // The recursive residual can drift; enforce the contract on the true one.
    Tensor resid = sub(M(z), rhs);
    const double true_res = norm2(resid);
    if (true_res > tol * rhs_norm)
        throw ConvergenceError("conjugate_gradient: no convergence after " +
                                   std::to_string(iter) + " iterations, residual " +
                                   std::to_string(true_res),
                               true_res, iter);
    return z;
}

// (AᴴA + lambda I)^{-1} rhs.
inline Tensor cg_solve(const LinearOperator& op, const Tensor& rhs, const CgConfig& cfg) {
    cfg.validate();
    return conjugate_gradient(
        [&](const Tensor& v) {
            Tensor r = op.normal(v);
            if (cfg.lambda != 0.0) axpy(cfg.lambda, v, r);
            return r;
        },
        rhs, cfg.tol, cfg.max_iter);
}

// P z = (AᴴA)† AᴴA z, realized as the lambda -> 0 limit of
// (AᴴA + lambda I)^{-1} AᴴA z. For the operators in this library AᴴA is an
// orthogonal projector, so the regularized solve returns AᴴA z / (1+lambda)
// exactly; the (1+lambda) factor removes that bias so the CG path matches
// the closed form at any configured lambda.
inline Tensor project(const LinearOperator& op, const Tensor& z, const CgConfig& cfg) {
    Tensor rhs = op.normal(z);
    Tensor s = cg_solve(op, rhs, cfg);
    return scale(s, 1.0 + cfg.lambda);
}

// x_LS = (AᴴA)† Aᴴ y; same de-biasing as project().
inline Tensor least_squares_image(const LinearOperator& op, const Tensor& y,
                                  const CgConfig& cfg) {
    Tensor rhs = op.adjoint(y);
    Tensor s = cg_solve(op, rhs, cfg);
    return scale(s, 1.0 + cfg.lambda);
}

}  // namespace suredip
