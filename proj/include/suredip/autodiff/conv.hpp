// SPDX-License-Identifier: Apache-2.0
//
// Direct 2-D cross-correlation kernels and their backward passes.
// Zero 'same' padding of (k-1)/2; odd kernel sizes only. Every output
// element is reduced in a fixed (ic, ki, kj) order, single-threaded, so
// results are bit-reproducible run to run.
#pragma once

#include <cstddef>

#include "suredip/core/tensor.hpp"

namespace suredip {

struct ConvDims {
    std::size_t cin, h, w;
    std::size_t cout, k;
    int stride;
    std::size_t hout, wout;
};

inline ConvDims conv_dims(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                          int stride) {
    if (input.rank() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + input.shape_str());
    if (kernel.rank() != 4) throw ShapeError("conv2d: kernel must be [Cout,Cin,k,k], got " + kernel.shape_str());
    if (bias.rank() != 1) throw ShapeError("conv2d: bias must be [Cout], got " + bias.shape_str());
    ConvDims d{};
    d.cin = input.extent(0);
    d.h = input.extent(1);
    d.w = input.extent(2);
    d.cout = kernel.extent(0);
    d.k = kernel.extent(2);
    d.stride = stride;
    if (kernel.extent(1) != d.cin)
        throw ShapeError("conv2d: kernel Cin " + std::to_string(kernel.extent(1)) +
                         " != input channels " + std::to_string(d.cin));
    if (kernel.extent(3) != d.k) throw ShapeError("conv2d: kernel must be square");
    if (d.k % 2 == 0) throw ShapeError("conv2d: kernel size must be odd");
    if (bias.extent(0) != d.cout) throw ShapeError("conv2d: bias length != Cout");
    if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
    const std::size_t pad = (d.k - 1) / 2;
    d.hout = (d.h + 2 * pad - d.k) / stride + 1;
    d.wout = (d.w + 2 * pad - d.k) / stride + 1;
    return d;
}

namespace detail {

// Output range [o_lo, o_hi) such that o*stride + koff - pad lands in [0, n).
inline void conv_range(std::size_t n, std::size_t nout, int stride, long koff, long pad,
                       std::size_t& o_lo, std::size_t& o_hi) {
    const long shift = koff - pad;
    long lo = 0;
    if (shift < 0) lo = (-shift + stride - 1) / stride;
    long hi = (static_cast<long>(n) - 1 - shift) / stride + 1;
    if (hi > static_cast<long>(nout)) hi = static_cast<long>(nout);
    if (hi < lo) hi = lo;
    o_lo = static_cast<std::size_t>(lo);
    o_hi = static_cast<std::size_t>(hi);
}

}  // namespace detail

inline void conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                           int stride, Tensor& out) {
    const ConvDims d = conv_dims(input, kernel, bias, stride);
    const long pad = static_cast<long>((d.k - 1) / 2);
    const double* in = input.data();
    const double* ker = kernel.data();
    double* o = out.data();
    const std::size_t in_ch = d.h * d.w, out_ch = d.hout * d.wout;
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
        double* ochan = o + oc * out_ch;
        const double bv = bias[oc];
        for (std::size_t i = 0; i < out_ch; ++i) ochan[i] = bv;
        for (std::size_t ic = 0; ic < d.cin; ++ic) {
            const double* ichan = in + ic * in_ch;
            const double* kslab = ker + (oc * d.cin + ic) * d.k * d.k;
            for (std::size_t ki = 0; ki < d.k; ++ki) {
                std::size_t oy_lo, oy_hi;
                detail::conv_range(d.h, d.hout, stride, static_cast<long>(ki), pad, oy_lo, oy_hi);
                for (std::size_t kj = 0; kj < d.k; ++kj) {
                    const double wv = kslab[ki * d.k + kj];
                    if (wv == 0.0) continue;
                    std::size_t ox_lo, ox_hi;
                    detail::conv_range(d.w, d.wout, stride, static_cast<long>(kj), pad, ox_lo, ox_hi);
                    const long yoff = static_cast<long>(ki) - pad;
                    const long xoff = static_cast<long>(kj) - pad;
                    for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
                        const double* irow = ichan + (oy * stride + yoff) * d.w;
                        double* orow = ochan + oy * d.wout;
                        if (stride == 1) {
                            const double* ip = irow + xoff;
                            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox)
                                orow[ox] += wv * ip[ox];
                        } else {
                            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox)
                                orow[ox] += wv * irow[ox * stride + xoff];
                        }
                    }
                }
            }
        }
    }
}

// Accumulates (+=) into dinput; caller zeroes on first touch.
inline void conv2d_backward_input(const Tensor& gout, const Tensor& kernel, const ConvDims& d,
                                  Tensor& dinput) {
    const long pad = static_cast<long>((d.k - 1) / 2);
    const double* g = gout.data();
    const double* ker = kernel.data();
    double* di = dinput.data();
    const std::size_t in_ch = d.h * d.w, out_ch = d.hout * d.wout;
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
        const double* gchan = g + oc * out_ch;
        for (std::size_t ic = 0; ic < d.cin; ++ic) {
            double* dchan = di + ic * in_ch;
            const double* kslab = ker + (oc * d.cin + ic) * d.k * d.k;
            for (std::size_t ki = 0; ki < d.k; ++ki) {
                std::size_t oy_lo, oy_hi;
                detail::conv_range(d.h, d.hout, d.stride, static_cast<long>(ki), pad, oy_lo, oy_hi);
                for (std::size_t kj = 0; kj < d.k; ++kj) {
                    const double wv = kslab[ki * d.k + kj];
                    if (wv == 0.0) continue;
                    std::size_t ox_lo, ox_hi;
                    detail::conv_range(d.w, d.wout, d.stride, static_cast<long>(kj), pad, ox_lo, ox_hi);
                    const long yoff = static_cast<long>(ki) - pad;
                    const long xoff = static_cast<long>(kj) - pad;
                    for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
                        double* drow = dchan + (oy * d.stride + yoff) * d.w;
                        const double* grow = gchan + oy * d.wout;
                        if (d.stride == 1) {
                            double* dp = drow + xoff;
                            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox)
                                dp[ox] += wv * grow[ox];
                        } else {
                            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox)
                                drow[ox * d.stride + xoff] += wv * grow[ox];
                        }
                    }
                }
            }
        }
    }
}

inline void conv2d_backward_kernel(const Tensor& gout, const Tensor& input, const ConvDims& d,
                                   Tensor& dkernel) {
    const long pad = static_cast<long>((d.k - 1) / 2);
    const double* g = gout.data();
    const double* in = input.data();
    double* dk = dkernel.data();
    const std::size_t in_ch = d.h * d.w, out_ch = d.hout * d.wout;
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
        const double* gchan = g + oc * out_ch;
        for (std::size_t ic = 0; ic < d.cin; ++ic) {
            const double* ichan = in + ic * in_ch;
            double* kslab = dk + (oc * d.cin + ic) * d.k * d.k;
            for (std::size_t ki = 0; ki < d.k; ++ki) {
                std::size_t oy_lo, oy_hi;
                detail::conv_range(d.h, d.hout, d.stride, static_cast<long>(ki), pad, oy_lo, oy_hi);
                for (std::size_t kj = 0; kj < d.k; ++kj) {
                    std::size_t ox_lo, ox_hi;
                    detail::conv_range(d.w, d.wout, d.stride, static_cast<long>(kj), pad, ox_lo, ox_hi);
                    const long yoff = static_cast<long>(ki) - pad;
                    const long xoff = static_cast<long>(kj) - pad;
                    double acc = 0.0;
                    for (std::size_t oy = oy_lo; oy < oy_hi; ++oy) {
                        const double* irow = ichan + (oy * d.stride + yoff) * d.w;
                        const double* grow = gchan + oy * d.wout;
                        if (d.stride == 1) {
                            const double* ip = irow + xoff;
                            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox)
                                acc += grow[ox] * ip[ox];
                        } else {
                            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox)
                                acc += grow[ox] * irow[ox * d.stride + xoff];
                        }
                    }
                    kslab[ki * d.k + kj] += acc;
                }
            }
        }
    }
}

inline void conv2d_backward_bias(const Tensor& gout, const ConvDims& d, Tensor& dbias) {
    const std::size_t out_ch = d.hout * d.wout;
    for (std::size_t oc = 0; oc < d.cout; ++oc) {
        const double* gchan = gout.data() + oc * out_ch;
        double acc = 0.0;
        for (std::size_t i = 0; i < out_ch; ++i) acc += gchan[i];
        dbias[oc] += acc;
    }
}

}  // namespace suredip
