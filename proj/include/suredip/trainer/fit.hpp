// SPDX-License-Identifier: Apache-2.0
//
// Single-shot fitting loop. The loss tape is built once and replayed every
// epoch (parameter leaves and the per-epoch probe are re-seeded in place),
// so a run is a pure function of (architecture, seeds, data, config). PSNR
// against the ground-truth phantom is evaluated per epoch for the trace
// only; it never influences optimization and there is no early stopping.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "suredip/autodiff/adam.hpp"
#include "suredip/losses/gsure.hpp"
#include "suredip/models/network.hpp"
#include "suredip/simdata/measure.hpp"

namespace suredip {

enum class LossKind { Dip, Gsure };

inline const char* loss_name(LossKind k) { return k == LossKind::Dip ? "dip" : "gsure"; }

struct OptimConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TraceRow {
    int epoch;
    double loss;
    double data_term;
    double divergence;
    double psnr;
};

struct RunRecord {
    std::vector<TraceRow> rows;
    double best_psnr = -std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    double final_psnr = 0.0;
    bool aborted = false;
    std::string diagnostic;
    std::string config_snapshot;
    double wall_seconds = 0.0;
    Tensor best_image;
    Tensor final_image;

    void write_csv(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw IoError("RunRecord::write_csv: cannot open " + path);
        f << "epoch,loss,data_term,divergence,psnr\n";
        char buf[128];
        for (const TraceRow& r : rows) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.loss,
                          r.data_term, r.divergence, r.psnr);
            f << buf;
        }
        if (!f) throw IoError("RunRecord::write_csv: short write to " + path);
    }
};

inline double overfit_gap(const RunRecord& record) {
    if (record.rows.empty()) throw StateError("overfit_gap: empty record");
    return record.best_psnr - record.final_psnr;
}

// Fits net in place; y is the measured data, truth is used for the PSNR
// trace only. Deterministic given (seed, gcfg.probe_seed). A non-finite
// loss aborts with a diagnostic record instead of continuing.
inline RunRecord fit(Network& net, const LinearOperator& op, const Tensor& y, LossKind loss_kind,
                     int epochs, std::uint64_t seed, const GsureConfig& gcfg,
                     const Phantom& truth, const OptimConfig& opt = {}) {
    if (epochs < 1) throw ConfigError("fit: epochs must be >= 1", "epochs");
    gcfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    Rng init_rng(seed);
    net.init_params(init_rng);

    const Tensor u = op.adjoint(y);
    Tensor x_ls;
    if (loss_kind == LossKind::Gsure) x_ls = least_squares_image(op, y, gcfg.cg);

    Graph g;
    Network::Bound bound = net.bind(g);
    auto forward = [&](Graph& gg, Var in) { return net.forward(gg, bound, in, &op); };

    LossParts parts;
    if (loss_kind == LossKind::Dip) {
        parts = build_dip_loss(g, forward, op, u, y);
    } else {
        parts = build_gsure_loss(g, forward, op, u, x_ls, gcfg, gcfg.probe_seed);
    }

    AdamState adam({net.param_count()}, opt.lr, opt.beta1, opt.beta2, opt.eps);
    RunRecord rec;
    rec.rows.reserve(static_cast<std::size_t>(epochs));

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        if (epoch > 1) {
            net.push_values(g, bound);
            if (loss_kind == LossKind::Gsure) {
                // Fresh probe per epoch, re-seeded from probe_seed + epoch.
                Rng prng(gcfg.probe_seed + static_cast<std::uint64_t>(epoch));
                for (Var b : parts.probe_vars) g.set_value(b, gsure_probe(op, prng));
            }
            g.recompute();
        }

        const double loss_val = g.scalar_value(parts.loss);
        const double data_val = g.scalar_value(parts.data_term);
        const double div_val =
            loss_kind == LossKind::Gsure ? g.scalar_value(parts.divergence) : 0.0;
        if (!std::isfinite(loss_val)) {
            rec.aborted = true;
            rec.diagnostic = "non-finite loss at epoch " + std::to_string(epoch);
            break;
        }

        const Tensor& xhat = g.value(parts.xhat);
        const double p = psnr(xhat, truth);
        rec.rows.push_back({epoch, loss_val, data_val, div_val, p});
        if (p > rec.best_psnr) {
            rec.best_psnr = p;
            rec.best_epoch = epoch;
            rec.best_image = xhat;
        }
        rec.final_psnr = p;
        rec.final_image = xhat;

        g.backward(parts.loss);
        Tensor grad = g.flat_param_grad(net.param_count());
        adam_step(adam, grad, net.phi());
    }

    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace suredip
