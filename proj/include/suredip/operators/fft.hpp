// SPDX-License-Identifier: Apache-2.0
//
// 1-D complex DFT plans used by the Fourier measurement operator. Radix-2
// iterative Cooley-Tukey with precomputed twiddle tables for power-of-two
// lengths, dense DFT matrix otherwise. Hand-rolled rather than FFTW so that
// transforms are bit-reproducible with a fixed flop order.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "suredip/core/errors.hpp"

namespace suredip {

class DftPlan {
public:
    explicit DftPlan(std::size_t n) : n_(n) {
        if (n == 0) throw ShapeError("DftPlan: zero length");
        pow2_ = (n & (n - 1)) == 0;
        if (pow2_) {
            bitrev_.resize(n);
            std::size_t log2n = 0;
            while ((std::size_t{1} << log2n) < n) ++log2n;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t r = 0;
                for (std::size_t b = 0; b < log2n; ++b)
                    if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
                bitrev_[i] = r;
            }
            // Twiddles per level, forward sign e^{-2*pi*i*j/len}.
            for (std::size_t len = 2; len <= n; len <<= 1) {
                for (std::size_t j = 0; j < len / 2; ++j) {
                    const double ang = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(len);
                    tw_re_.push_back(std::cos(ang));
                    tw_im_.push_back(std::sin(ang));
                }
            }
        } else {
            mat_re_.resize(n * n);
            mat_im_.resize(n * n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double ang = -2.0 * kPi * static_cast<double>(i * j % n) / static_cast<double>(n);
                    mat_re_[i * n + j] = std::cos(ang);
                    mat_im_[i * n + j] = std::sin(ang);
                }
        }
    }

    std::size_t length() const { return n_; }

    // In-place unnormalized transform of a length-n complex signal.
    void transform(double* re, double* im, bool inverse) const {
        if (pow2_) {
            for (std::size_t i = 0; i < n_; ++i) {
                const std::size_t j = bitrev_[i];
                if (i < j) {
                    std::swap(re[i], re[j]);
                    std::swap(im[i], im[j]);
                }
            }
            std::size_t tw_base = 0;
            for (std::size_t len = 2; len <= n_; len <<= 1) {
                const std::size_t half = len / 2;
                for (std::size_t start = 0; start < n_; start += len) {
                    for (std::size_t j = 0; j < half; ++j) {
                        const double wr = tw_re_[tw_base + j];
                        const double wi = inverse ? -tw_im_[tw_base + j] : tw_im_[tw_base + j];
                        const std::size_t a = start + j, b = start + j + half;
                        const double vr = re[b] * wr - im[b] * wi;
                        const double vi = re[b] * wi + im[b] * wr;
                        re[b] = re[a] - vr;
                        im[b] = im[a] - vi;
                        re[a] += vr;
                        im[a] += vi;
                    }
                }
                tw_base += half;
            }
        } else {
            std::vector<double> or_(n_, 0.0), oi(n_, 0.0);
            for (std::size_t i = 0; i < n_; ++i) {
                double ar = 0.0, ai = 0.0;
                const double* mr = mat_re_.data() + i * n_;
                const double* mi = mat_im_.data() + i * n_;
                for (std::size_t j = 0; j < n_; ++j) {
                    const double wr = mr[j];
                    const double wi = inverse ? -mi[j] : mi[j];
                    ar += re[j] * wr - im[j] * wi;
                    ai += re[j] * wi + im[j] * wr;
                }
                or_[i] = ar;
                oi[i] = ai;
            }
            for (std::size_t i = 0; i < n_; ++i) {
                re[i] = or_[i];
                im[i] = oi[i];
            }
        }
    }

private:
    static constexpr double kPi = 3.141592653589793238462643383279502884;
    std::size_t n_;
    bool pow2_ = false;
    std::vector<std::size_t> bitrev_;
    std::vector<double> tw_re_, tw_im_;
    std::vector<double> mat_re_, mat_im_;
};

}  // namespace suredip
