// SPDX-License-Identifier: Apache-2.0
//
// Untrained reconstruction networks over [2,H,W] complex images:
//   denoiser — 5 conv layers (3x3, relu between, linear last) computing a
//              residual correction x + r(x);
//   unet     — 3-scale encoder/decoder, stride-2 downsampling, nearest-
//              neighbor upsampling, skip concatenations, no residual;
//   unrolled — K model-based steps x_{k+1} = (AᴴA + λ I)^{-1}(u + λ D(x_k))
//              with the 5-layer denoiser D shared across steps and the
//              data-consistency solve unrolled as a fixed-iteration CG tape.
// Parameters live in one flat vector with per-layer slices.
#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "suredip/autodiff/graph.hpp"
#include "suredip/core/io.hpp"
#include "suredip/core/rng.hpp"
#include "suredip/operators/cg.hpp"
#include "suredip/operators/linear_operator.hpp"

namespace suredip {

enum class ArchKind { Denoiser, Unet, Unrolled };

inline const char* arch_name(ArchKind a) {
    switch (a) {
        case ArchKind::Denoiser: return "denoiser";
        case ArchKind::Unet: return "unet";
        case ArchKind::Unrolled: return "unrolled";
    }
    return "?";
}

inline ArchKind arch_from_name(const std::string& s) {
    if (s == "denoiser") return ArchKind::Denoiser;
    if (s == "unet") return ArchKind::Unet;
    if (s == "unrolled") return ArchKind::Unrolled;
    throw ConfigError("unknown architecture '" + s + "'", "network.arch");
}

struct NetworkHyper {
    std::size_t hidden = 32;        // conv width (denoiser) / base width (unet)
    std::size_t unroll_steps = 10;  // K
    std::size_t dc_cg_steps = 10;   // CG iterations per data-consistency solve
    double lambda_dc_init = 1.0;
};

struct ParamSlice {
    std::string name;
    std::size_t offset;
    std::vector<std::size_t> shape;
    std::size_t size() const { return Tensor::count(shape); }
};

// Differentiable data-consistency solve: CG on (AᴴA + λI) s = u + λ z,
// unrolled for a fixed iteration count so the tape is static. λ enters as a
// [1] node and receives gradients. div_safe keeps an identically-zero rhs
// from producing NaNs (the solution is then correctly zero).
inline Var dc_consistency(Graph& g, const LinearOperator& op, Var u, Var z, Var lambda,
                          std::size_t n_iters) {
    if (n_iters < 1) throw ConfigError("dc_consistency: need at least one CG step");
    Var rhs = g.add(u, g.scale_var(z, lambda));
    Var s;
    Var r = rhs;
    Var p = rhs;
    Var rs = g.dot(r, r);
    for (std::size_t it = 0; it < n_iters; ++it) {
        Var mp = g.add(g.lin_adjoint(op, g.lin_apply(op, p)), g.scale_var(p, lambda));
        Var alpha = g.div_safe(rs, g.dot(p, mp));
        s = it == 0 ? g.scale_var(p, alpha) : g.add(s, g.scale_var(p, alpha));
        r = g.sub(r, g.scale_var(mp, alpha));
        Var rs_new = g.dot(r, r);
        Var beta = g.div_safe(rs_new, rs);
        p = g.add(r, g.scale_var(p, beta));
        rs = rs_new;
    }
    return s;
}

class Network {
public:
    static Network make(ArchKind arch, NetworkHyper hyper = {}) {
        Network net;
        net.arch_ = arch;
        net.hyper_ = hyper;
        net.build_slices();
        net.phi_ = Tensor({net.param_count_});
        return net;
    }

    ArchKind arch() const { return arch_; }
    const NetworkHyper& hyper() const { return hyper_; }
    std::size_t param_count() const { return param_count_; }
    const std::vector<ParamSlice>& slices() const { return slices_; }
    Tensor& phi() { return phi_; }
    const Tensor& phi() const { return phi_; }

    // He-uniform kernels (limit sqrt(6/fan_in)), zero biases, λ_dc at its
    // configured initial value. Draw order is slice order, row-major.
    void init_params(Rng& rng) {
        for (const ParamSlice& s : slices_) {
            double* dst = phi_.data() + s.offset;
            if (s.name == "lambda_dc") {
                dst[0] = hyper_.lambda_dc_init;
            } else if (s.shape.size() == 4) {
                const double fan_in =
                    static_cast<double>(s.shape[1] * s.shape[2] * s.shape[3]);
                const double limit = std::sqrt(6.0 / fan_in);
                for (std::size_t i = 0; i < s.size(); ++i) dst[i] = rng.uniform(-limit, limit);
            } else {
                for (std::size_t i = 0; i < s.size(); ++i) dst[i] = 0.0;
            }
        }
    }

    struct Bound {
        std::vector<Var> vars;  // aligned with slices()
    };

    // Creates one trainable leaf per slice, loaded from phi.
    Bound bind(Graph& g) const {
        Bound b;
        b.vars.reserve(slices_.size());
        for (const ParamSlice& s : slices_) b.vars.push_back(g.parameter(slice_tensor(s), s.offset));
        return b;
    }

    // Pushes current phi values into an existing tape (after an optimizer
    // step); the caller recomputes.
    void push_values(Graph& g, const Bound& b) const {
        for (std::size_t i = 0; i < slices_.size(); ++i)
            g.set_value(b.vars[i], slice_tensor(slices_[i]));
    }

    // Builds the forward map u -> xhat on the tape. `op` is required by the
    // unrolled architecture and ignored by the others.
    Var forward(Graph& g, const Bound& b, Var u, const LinearOperator* op = nullptr) const {
        switch (arch_) {
            case ArchKind::Denoiser: return denoiser_forward_graph(g, b, u, 0);
            case ArchKind::Unet: return unet_forward_graph(g, b, u);
            case ArchKind::Unrolled: {
                if (op == nullptr)
                    throw StateError("Network::forward: unrolled architecture needs an operator");
                Var x = u;
                Var lambda = b.vars[lambda_slot_];
                for (std::size_t k = 0; k < hyper_.unroll_steps; ++k) {
                    Var z = denoiser_forward_graph(g, b, x, 0);
                    x = dc_consistency(g, *op, u, z, lambda, hyper_.dc_cg_steps);
                }
                return x;
            }
        }
        throw StateError("Network::forward: bad arch");
    }

    // Self-binding forward functor for the one-shot loss entry points: binds
    // a fresh set of parameter leaves into whichever tape it is handed.
    // Repeated calls on one tape duplicate the leaves; their gradients sum
    // at the shared flat offsets, which is the correct total derivative.
    auto forward_fn(const LinearOperator* op = nullptr) const {
        return [this, op](Graph& g, Var in) {
            Bound b = bind(g);
            return forward(g, b, in, op);
        };
    }

    // Convenience plain-tensor forward (fresh throwaway tape).
    Tensor forward_eval(const Tensor& u, const LinearOperator* op = nullptr) const {
        Graph g;
        Bound b = bind(g);
        Var out = forward(g, b, g.constant(u), op);
        return g.value(out);
    }

    // ---- checkpoints: <base>.sdt1 (flat phi) + <base>.json sidecar ----

    void save_checkpoint(const std::string& base) const {
        write_tensor(base + ".sdt1", phi_);
        nlohmann::json j;
        j["arch"] = arch_name(arch_);
        j["hidden_width"] = hyper_.hidden;
        j["unroll_steps"] = hyper_.unroll_steps;
        j["dc_cg_steps"] = hyper_.dc_cg_steps;
        j["lambda_dc_init"] = hyper_.lambda_dc_init;
        j["param_count"] = param_count_;
        std::ofstream f(base + ".json");
        if (!f) throw IoError("save_checkpoint: cannot open " + base + ".json");
        f << j.dump(2) << "\n";
    }

    static Network load_checkpoint(const std::string& base) {
        std::ifstream f(base + ".json");
        if (!f) throw IoError("load_checkpoint: cannot open " + base + ".json");
        nlohmann::json j = nlohmann::json::parse(f);
        NetworkHyper h;
        h.hidden = j.at("hidden_width").get<std::size_t>();
        h.unroll_steps = j.at("unroll_steps").get<std::size_t>();
        h.dc_cg_steps = j.at("dc_cg_steps").get<std::size_t>();
        h.lambda_dc_init = j.at("lambda_dc_init").get<double>();
        Network net = make(arch_from_name(j.at("arch").get<std::string>()), h);
        Tensor phi = read_tensor(base + ".sdt1");
        if (phi.size() != net.param_count_)
            throw IoError("load_checkpoint: parameter count mismatch");
        net.phi_ = std::move(phi);
        return net;
    }

private:
    void add_slice(const std::string& name, std::vector<std::size_t> shape) {
        ParamSlice s{name, param_count_, std::move(shape)};
        param_count_ += s.size();
        slices_.push_back(std::move(s));
    }

    void add_conv(const std::string& name, std::size_t cout, std::size_t cin, std::size_t k) {
        add_slice(name + ".kernel", {cout, cin, k, k});
        add_slice(name + ".bias", {cout});
    }

    void build_slices() {
        const std::size_t w = hyper_.hidden;
        switch (arch_) {
            case ArchKind::Denoiser:
            case ArchKind::Unrolled:
                add_conv("d0", w, 2, 3);
                add_conv("d1", w, w, 3);
                add_conv("d2", w, w, 3);
                add_conv("d3", w, w, 3);
                add_conv("d4", 2, w, 3);
                if (arch_ == ArchKind::Unrolled) {
                    lambda_slot_ = slices_.size();
                    add_slice("lambda_dc", {1});
                }
                break;
            case ArchKind::Unet:
                add_conv("enc1a", w, 2, 3);
                add_conv("enc1b", w, w, 3);
                add_conv("down1", 2 * w, w, 3);
                add_conv("enc2", 2 * w, 2 * w, 3);
                add_conv("down2", 4 * w, 2 * w, 3);
                add_conv("bottleneck", 4 * w, 4 * w, 3);
                add_conv("dec2", 2 * w, 6 * w, 3);
                add_conv("dec1", w, 3 * w, 3);
                add_conv("out", 2, w, 1);
                break;
        }
    }

    Tensor slice_tensor(const ParamSlice& s) const {
        Tensor t(s.shape);
        const double* src = phi_.data() + s.offset;
        std::copy(src, src + s.size(), t.data());
        return t;
    }

    // slot0 holds the first denoiser conv; layers are consecutive pairs.
    Var denoiser_forward_graph(Graph& g, const Bound& b, Var x, std::size_t slot0) const {
        Var h = x;
        for (std::size_t layer = 0; layer < 5; ++layer) {
            Var kernel = b.vars[slot0 + 2 * layer];
            Var bias = b.vars[slot0 + 2 * layer + 1];
            h = g.conv2d(h, kernel, bias);
            if (layer + 1 < 5) h = g.relu(h);
        }
        return g.add(x, h);
    }

    Var unet_forward_graph(Graph& g, const Bound& b, Var u) const {
        const Tensor& v = g.value(u);
        if (v.extent(1) % 4 != 0 || v.extent(2) % 4 != 0)
            throw ShapeError("unet: input extents must be divisible by 4, got " + v.shape_str());
        auto conv = [&](Var x, std::size_t slot, int stride) {
            return g.conv2d(x, b.vars[2 * slot], b.vars[2 * slot + 1], stride);
        };
        Var e1 = g.relu(conv(u, 0, 1));
        e1 = g.relu(conv(e1, 1, 1));
        Var d1 = g.relu(conv(e1, 2, 2));
        Var e2 = g.relu(conv(d1, 3, 1));
        Var d2 = g.relu(conv(e2, 4, 2));
        Var bott = g.relu(conv(d2, 5, 1));
        Var f2 = g.relu(conv(g.concat_channels(g.upsample2(bott), e2), 6, 1));
        Var f1 = g.relu(conv(g.concat_channels(g.upsample2(f2), e1), 7, 1));
        return conv(f1, 8, 1);
    }

    ArchKind arch_ = ArchKind::Denoiser;
    NetworkHyper hyper_;
    std::vector<ParamSlice> slices_;
    std::size_t param_count_ = 0;
    std::size_t lambda_slot_ = 0;
    Tensor phi_;
};

// Spec-level convenience wrappers.

inline Tensor denoiser_forward(const Network& net, const Tensor& x) {
    if (net.arch() != ArchKind::Denoiser && net.arch() != ArchKind::Unrolled)
        throw StateError("denoiser_forward: wrong architecture");
    Graph g;
    Network::Bound b = net.bind(g);
    Var h = g.constant(x);
    // First five slice pairs are the denoiser convs for both archs.
    for (std::size_t layer = 0; layer < 5; ++layer) {
        h = g.conv2d(h, b.vars[2 * layer], b.vars[2 * layer + 1]);
        if (layer + 1 < 5) h = g.relu(h);
    }
    return add(x, g.value(h));
}

inline Tensor unet_forward(const Network& net, const Tensor& u) {
    if (net.arch() != ArchKind::Unet) throw StateError("unet_forward: wrong architecture");
    return net.forward_eval(u);
}

inline Tensor unrolled_forward(const Network& net, const LinearOperator& op, const Tensor& y,
                               const CgConfig&) {
    if (net.arch() != ArchKind::Unrolled) throw StateError("unrolled_forward: wrong architecture");
    return net.forward_eval(op.adjoint(y), &op);
}

}  // namespace suredip
