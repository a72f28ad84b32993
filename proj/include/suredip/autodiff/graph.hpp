// SPDX-License-Identifier: Apache-2.0
//
// Minimal deterministic reverse-mode tape over dense real tensors.
//
// Ops execute eagerly as nodes are recorded, so the tape always holds valid
// activations; set_value() on a leaf marks the tape stale and recompute()
// replays the recorded program in place. Replays are bit-identical because
// every kernel reduces in a fixed sequential order. One tape is single-
// threaded; tapes are independent and may live on different threads.
#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "suredip/autodiff/conv.hpp"
#include "suredip/core/tensor.hpp"

namespace suredip {

// Linear maps the tape can apply and differentiate through. The VJP of
// apply() is adjoint() and vice versa, which is what makes measurement
// operators differentiable without tracing their internals.
class LinearMap {
public:
    virtual ~LinearMap() = default;
    virtual Tensor apply(const Tensor& x) const = 0;
    virtual Tensor adjoint(const Tensor& y) const = 0;
};

// Dense matrix map [M,N]; used by divergence/trace tests.
class DenseLinearMap : public LinearMap {
public:
    DenseLinearMap(std::size_t rows, std::size_t cols, Tensor matrix,
                   std::vector<std::size_t> out_shape, std::vector<std::size_t> in_shape)
        : rows_(rows), cols_(cols), m_(std::move(matrix)),
          out_shape_(std::move(out_shape)), in_shape_(std::move(in_shape)) {
        if (m_.size() != rows_ * cols_) throw ShapeError("DenseLinearMap: matrix size mismatch");
    }

    Tensor apply(const Tensor& x) const override {
        if (x.size() != cols_) throw ShapeError("DenseLinearMap::apply: input size mismatch");
        Tensor y(out_shape_);
        for (std::size_t i = 0; i < rows_; ++i) {
            double acc = 0.0;
            const double* row = m_.data() + i * cols_;
            for (std::size_t j = 0; j < cols_; ++j) acc += row[j] * x[j];
            y[i] = acc;
        }
        return y;
    }

    Tensor adjoint(const Tensor& y) const override {
        if (y.size() != rows_) throw ShapeError("DenseLinearMap::adjoint: input size mismatch");
        Tensor x(in_shape_);
        x.fill(0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            const double* row = m_.data() + i * cols_;
            const double g = y[i];
            for (std::size_t j = 0; j < cols_; ++j) x[j] += row[j] * g;
        }
        return x;
    }

    double trace() const {
        double t = 0.0;
        const std::size_t n = rows_ < cols_ ? rows_ : cols_;
        for (std::size_t i = 0; i < n; ++i) t += m_[i * cols_ + i];
        return t;
    }

private:
    std::size_t rows_, cols_;
    Tensor m_;
    std::vector<std::size_t> out_shape_, in_shape_;
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

enum class Activation { Relu, Identity };

constexpr std::size_t kNotParam = std::numeric_limits<std::size_t>::max();

class Graph {
    enum class Op : unsigned char {
        Leaf, Add, Sub, Mul, ScaleConst, ScaleVar, Relu, Conv2d,
        Upsample2, ConcatChannels, LinApply, LinAdjoint, Dot, Sum, DivSafe
    };

    struct Node {
        Op op = Op::Leaf;
        std::array<int, 3> in{-1, -1, -1};
        int nin = 0;
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        std::size_t param_offset = kNotParam;
        double c = 0.0;  // ScaleConst factor
        int stride = 1;  // Conv2d
        const LinearMap* lin = nullptr;
    };

public:
    // ---- building leaves ----

    // Trainable leaves carry the offset of their slice in the owner's flat
    // parameter vector so backward can assemble a flat gradient.
    Var parameter(Tensor value, std::size_t flat_offset) {
        Node n;
        n.value = std::move(value);
        n.requires_grad = true;
        n.param_offset = flat_offset;
        return push(std::move(n));
    }

    // Non-trainable leaf that still receives a gradient (e.g. the network
    // input u).
    Var input(Tensor value) {
        Node n;
        n.value = std::move(value);
        n.requires_grad = true;
        return push(std::move(n));
    }

    Var constant(Tensor value) {
        Node n;
        n.value = std::move(value);
        return push(std::move(n));
    }

    // ---- ops ----

    Var add(Var a, Var b) { return binary(Op::Add, a, b); }
    Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }
    Var mul(Var a, Var b) { return binary(Op::Mul, a, b); }

    Var scale_const(Var a, double c) {
        Node n;
        n.op = Op::ScaleConst;
        n.in = {a.id, -1, -1};
        n.nin = 1;
        n.c = c;
        n.requires_grad = node(a).requires_grad;
        return push_exec(std::move(n));
    }

    // x * s with s a [1] tensor node.
    Var scale_var(Var x, Var s) {
        if (node(s).value.size() != 1) throw ShapeError("scale_var: scale must be [1]");
        return binary(Op::ScaleVar, x, s);
    }

    Var relu(Var a) {
        Node n;
        n.op = Op::Relu;
        n.in = {a.id, -1, -1};
        n.nin = 1;
        n.requires_grad = node(a).requires_grad;
        return push_exec(std::move(n));
    }

    // Identity adds no node; relu records one.
    Var activation(Var a, Activation kind) {
        return kind == Activation::Relu ? relu(a) : a;
    }

    Var conv2d(Var x, Var kernel, Var bias, int stride = 1) {
        conv_dims(node(x).value, node(kernel).value, node(bias).value, stride);
        Node n;
        n.op = Op::Conv2d;
        n.in = {x.id, kernel.id, bias.id};
        n.nin = 3;
        n.stride = stride;
        n.requires_grad = node(x).requires_grad || node(kernel).requires_grad ||
                          node(bias).requires_grad;
        return push_exec(std::move(n));
    }

    Var upsample2(Var a) {
        if (node(a).value.rank() != 3) throw ShapeError("upsample2: need [C,H,W]");
        Node n;
        n.op = Op::Upsample2;
        n.in = {a.id, -1, -1};
        n.nin = 1;
        n.requires_grad = node(a).requires_grad;
        return push_exec(std::move(n));
    }

    Var concat_channels(Var a, Var b) {
        const Tensor& va = node(a).value;
        const Tensor& vb = node(b).value;
        if (va.rank() != 3 || vb.rank() != 3 || va.extent(1) != vb.extent(1) ||
            va.extent(2) != vb.extent(2))
            throw ShapeError("concat_channels: spatial extents differ");
        Node n;
        n.op = Op::ConcatChannels;
        n.in = {a.id, b.id, -1};
        n.nin = 2;
        n.requires_grad = node(a).requires_grad || node(b).requires_grad;
        return push_exec(std::move(n));
    }

    // map must outlive the graph.
    Var lin_apply(const LinearMap& map, Var x) {
        Node n;
        n.op = Op::LinApply;
        n.in = {x.id, -1, -1};
        n.nin = 1;
        n.lin = &map;
        n.requires_grad = node(x).requires_grad;
        return push_exec(std::move(n));
    }

    Var lin_adjoint(const LinearMap& map, Var y) {
        Node n;
        n.op = Op::LinAdjoint;
        n.in = {y.id, -1, -1};
        n.nin = 1;
        n.lin = &map;
        n.requires_grad = node(y).requires_grad;
        return push_exec(std::move(n));
    }

    Var dot(Var a, Var b) { return binary(Op::Dot, a, b); }

    Var sum(Var a) {
        Node n;
        n.op = Op::Sum;
        n.in = {a.id, -1, -1};
        n.nin = 1;
        n.requires_grad = node(a).requires_grad;
        return push_exec(std::move(n));
    }

    Var sumsq(Var a) { return dot(a, a); }

    // Scalar division with the 0/0 -> 0 convention; keeps an all-zero CG
    // tape (zero rhs) from producing NaNs.
    Var div_safe(Var a, Var b) {
        if (node(a).value.size() != 1 || node(b).value.size() != 1)
            throw ShapeError("div_safe: scalar nodes only");
        return binary(Op::DivSafe, a, b);
    }

    // ---- values, replay, gradients ----

    const Tensor& value(Var v) const { return node(v).value; }
    double scalar_value(Var v) const {
        const Tensor& t = node(v).value;
        if (t.size() != 1) throw ShapeError("scalar_value: node is not scalar");
        return t[0];
    }

    void set_value(Var leaf, const Tensor& v) {
        Node& n = node(leaf);
        if (n.op != Op::Leaf) throw StateError("set_value: only leaves can be re-assigned");
        check_same_shape(n.value, v, "set_value");
        n.value = v;
        stale_ = true;
    }

    // Replays every recorded op in order, in place.
    void recompute() {
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].nin > 0) exec(nodes_[i]);
        stale_ = false;
    }

    bool stale() const { return stale_; }
    std::size_t node_count() const { return nodes_.size(); }

    void backward(Var out) { backward(out, Tensor::scalar(1.0)); }

    void backward(Var out, const Tensor& seed) {
        if (nodes_.empty()) throw StateError("backward: empty graph, no forward pass recorded");
        if (stale_) throw StateError("backward: leaf values changed, recompute() before backward");
        Node& on = node(out);
        check_same_shape(on.value, seed, "backward seed");
        for (Node& n : nodes_) n.has_grad = false;
        accum(out.id, seed);
        for (int i = out.id; i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (!n.has_grad || n.nin == 0) continue;
            pull(n);
        }
        grads_valid_ = true;
    }

    // Gradient of the last backward seed w.r.t. a leaf (or any node). Nodes
    // never reached by the sweep have gradient zero.
    Tensor grad(Var v) const {
        if (!grads_valid_) throw StateError("grad: no backward pass has run");
        const Node& n = node(v);
        if (!n.has_grad) return Tensor(n.value.shape());
        return n.grad;
    }

    // Gathers trainable-leaf gradients into one flat vector of length n.
    Tensor flat_param_grad(std::size_t n) const {
        if (!grads_valid_) throw StateError("flat_param_grad: no backward pass has run");
        Tensor g({n});
        for (const Node& nd : nodes_) {
            if (nd.param_offset == kNotParam) continue;
            if (nd.param_offset + nd.value.size() > n)
                throw ShapeError("flat_param_grad: parameter slice exceeds flat length");
            if (!nd.has_grad) continue;
            for (std::size_t i = 0; i < nd.value.size(); ++i)
                g[nd.param_offset + i] += nd.grad[i];
        }
        return g;
    }

private:
    Node& node(Var v) {
        if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
            throw StateError("graph: invalid node id " + std::to_string(v.id));
        return nodes_[static_cast<std::size_t>(v.id)];
    }
    const Node& node(Var v) const { return const_cast<Graph*>(this)->node(v); }

    Var push(Node n) {
        nodes_.push_back(std::move(n));
        return {static_cast<int>(nodes_.size() - 1)};
    }

    Var push_exec(Node n) {
        Var v = push(std::move(n));
        exec(nodes_.back());
        return v;
    }

    Var binary(Op op, Var a, Var b) {
        Node n;
        n.op = op;
        n.in = {a.id, b.id, -1};
        n.nin = 2;
        n.requires_grad = node(a).requires_grad || node(b).requires_grad;
        return push_exec(std::move(n));
    }

    const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    void exec(Node& n) {
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Add:
                n.value = suredip::add(val(n.in[0]), val(n.in[1]));
                break;
            case Op::Sub:
                n.value = suredip::sub(val(n.in[0]), val(n.in[1]));
                break;
            case Op::Mul:
                n.value = suredip::mul(val(n.in[0]), val(n.in[1]));
                break;
            case Op::ScaleConst:
                n.value = suredip::scale(val(n.in[0]), n.c);
                break;
            case Op::ScaleVar:
                n.value = suredip::scale(val(n.in[0]), val(n.in[1])[0]);
                break;
            case Op::Relu: {
                const Tensor& x = val(n.in[0]);
                Tensor r(x.shape());
                for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] > 0.0 ? x[i] : 0.0;
                n.value = std::move(r);
                break;
            }
            case Op::Conv2d: {
                const ConvDims d = conv_dims(val(n.in[0]), val(n.in[1]), val(n.in[2]), n.stride);
                if (n.value.size() != d.cout * d.hout * d.wout)
                    n.value = Tensor({d.cout, d.hout, d.wout});
                conv2d_forward(val(n.in[0]), val(n.in[1]), val(n.in[2]), n.stride, n.value);
                break;
            }
            case Op::Upsample2: {
                const Tensor& x = val(n.in[0]);
                const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
                Tensor r({c, 2 * h, 2 * w});
                for (std::size_t ch = 0; ch < c; ++ch)
                    for (std::size_t y = 0; y < h; ++y) {
                        const double* src = x.data() + (ch * h + y) * w;
                        double* d0 = r.data() + (ch * 2 * h + 2 * y) * 2 * w;
                        double* d1 = d0 + 2 * w;
                        for (std::size_t xx = 0; xx < w; ++xx) {
                            d0[2 * xx] = d0[2 * xx + 1] = src[xx];
                            d1[2 * xx] = d1[2 * xx + 1] = src[xx];
                        }
                    }
                n.value = std::move(r);
                break;
            }
            case Op::ConcatChannels: {
                const Tensor& a = val(n.in[0]);
                const Tensor& b = val(n.in[1]);
                Tensor r({a.extent(0) + b.extent(0), a.extent(1), a.extent(2)});
                std::copy(a.data(), a.data() + a.size(), r.data());
                std::copy(b.data(), b.data() + b.size(), r.data() + a.size());
                n.value = std::move(r);
                break;
            }
            case Op::LinApply:
                n.value = n.lin->apply(val(n.in[0]));
                break;
            case Op::LinAdjoint:
                n.value = n.lin->adjoint(val(n.in[0]));
                break;
            case Op::Dot:
                n.value = Tensor::scalar(suredip::dot(val(n.in[0]), val(n.in[1])));
                break;
            case Op::Sum:
                n.value = Tensor::scalar(suredip::sum(val(n.in[0])));
                break;
            case Op::DivSafe: {
                const double a = val(n.in[0])[0];
                const double b = val(n.in[1])[0];
                n.value = Tensor::scalar(std::abs(b) < 1e-300 ? 0.0 : a / b);
                break;
            }
        }
    }

    // Ensures the grad buffer exists and is zeroed for this sweep.
    Tensor& grad_buf(int id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.has_grad) {
            if (!n.grad.same_shape(n.value)) n.grad = Tensor(n.value.shape());
            else n.grad.fill(0.0);
            n.has_grad = true;
        }
        return n.grad;
    }

    void accum(int id, const Tensor& g) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.requires_grad) return;
        Tensor& buf = grad_buf(id);
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
    }

    void pull(Node& n) {
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Add:
                accum(n.in[0], g);
                accum(n.in[1], g);
                break;
            case Op::Sub:
                accum(n.in[0], g);
                if (nodes_[n.in[1]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) buf[i] -= g[i];
                }
                break;
            case Op::Mul:
                if (nodes_[n.in[0]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[0]);
                    const Tensor& vb = val(n.in[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * vb[i];
                }
                if (nodes_[n.in[1]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[1]);
                    const Tensor& va = val(n.in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * va[i];
                }
                break;
            case Op::ScaleConst:
                if (nodes_[n.in[0]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += n.c * g[i];
                }
                break;
            case Op::ScaleVar: {
                const double s = val(n.in[1])[0];
                if (nodes_[n.in[0]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += s * g[i];
                }
                if (nodes_[n.in[1]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[1]);
                    buf[0] += suredip::dot(g, val(n.in[0]));
                }
                break;
            }
            case Op::Relu: {
                if (!nodes_[n.in[0]].requires_grad) break;
                Tensor& buf = grad_buf(n.in[0]);
                const Tensor& x = val(n.in[0]);
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (x[i] > 0.0) buf[i] += g[i];
                break;
            }
            case Op::Conv2d: {
                const ConvDims d = conv_dims(val(n.in[0]), val(n.in[1]), val(n.in[2]), n.stride);
                if (nodes_[n.in[0]].requires_grad)
                    conv2d_backward_input(g, val(n.in[1]), d, grad_buf(n.in[0]));
                if (nodes_[n.in[1]].requires_grad)
                    conv2d_backward_kernel(g, val(n.in[0]), d, grad_buf(n.in[1]));
                if (nodes_[n.in[2]].requires_grad)
                    conv2d_backward_bias(g, d, grad_buf(n.in[2]));
                break;
            }
            case Op::Upsample2: {
                if (!nodes_[n.in[0]].requires_grad) break;
                Tensor& buf = grad_buf(n.in[0]);
                const Tensor& x = val(n.in[0]);
                const std::size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
                for (std::size_t ch = 0; ch < c; ++ch)
                    for (std::size_t y = 0; y < h; ++y) {
                        double* dst = buf.data() + (ch * h + y) * w;
                        const double* g0 = g.data() + (ch * 2 * h + 2 * y) * 2 * w;
                        const double* g1 = g0 + 2 * w;
                        for (std::size_t xx = 0; xx < w; ++xx)
                            dst[xx] += g0[2 * xx] + g0[2 * xx + 1] + g1[2 * xx] + g1[2 * xx + 1];
                    }
                break;
            }
            case Op::ConcatChannels: {
                const Tensor& a = val(n.in[0]);
                if (nodes_[n.in[0]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[0]);
                    for (std::size_t i = 0; i < a.size(); ++i) buf[i] += g[i];
                }
                if (nodes_[n.in[1]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[1]);
                    const std::size_t off = a.size();
                    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[off + i];
                }
                break;
            }
            case Op::LinApply:
                if (nodes_[n.in[0]].requires_grad) {
                    Tensor back = n.lin->adjoint(g);
                    accum(n.in[0], back);
                }
                break;
            case Op::LinAdjoint:
                if (nodes_[n.in[0]].requires_grad) {
                    Tensor back = n.lin->apply(g);
                    accum(n.in[0], back);
                }
                break;
            case Op::Dot: {
                const double g0 = g[0];
                if (nodes_[n.in[0]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[0]);
                    const Tensor& vb = val(n.in[1]);
                    for (std::size_t i = 0; i < vb.size(); ++i) buf[i] += g0 * vb[i];
                }
                if (nodes_[n.in[1]].requires_grad) {
                    Tensor& buf = grad_buf(n.in[1]);
                    const Tensor& va = val(n.in[0]);
                    for (std::size_t i = 0; i < va.size(); ++i) buf[i] += g0 * va[i];
                }
                break;
            }
            case Op::Sum: {
                if (!nodes_[n.in[0]].requires_grad) break;
                Tensor& buf = grad_buf(n.in[0]);
                const double g0 = g[0];
                for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g0;
                break;
            }
            case Op::DivSafe: {
                const double a = val(n.in[0])[0];
                const double b = val(n.in[1])[0];
                if (std::abs(b) < 1e-300) break;
                const double g0 = g[0];
                if (nodes_[n.in[0]].requires_grad) grad_buf(n.in[0])[0] += g0 / b;
                if (nodes_[n.in[1]].requires_grad) grad_buf(n.in[1])[0] -= g0 * a / (b * b);
                break;
            }
        }
    }

    std::vector<Node> nodes_;
    bool stale_ = false;
    bool grads_valid_ = false;
};

}  // namespace suredip
