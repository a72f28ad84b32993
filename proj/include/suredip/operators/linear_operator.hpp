// SPDX-License-Identifier: Apache-2.0
//
// Measurement operators A: masked unitary 2-D DFT and inpainting. Images
// and measurements are complex, carried as [2,H,W] real tensors (channel 0
// real, channel 1 imaginary); measurements live on the full grid with zeros
// at unsampled locations. The DFT is the centered variant
// (fftshift o F o ifftshift, unitary), so the mask's center row/column
// indexes the zero frequency and variable-density masks sample low
// frequencies as intended. Both kinds satisfy the dot test exactly and have
// AᴴA equal to an orthogonal projector, which the projection and
// least-squares paths rely on.
#pragma once

#include <memory>

#include "suredip/autodiff/graph.hpp"
#include "suredip/core/tensor.hpp"
#include "suredip/operators/fft.hpp"

namespace suredip {

enum class OperatorKind { FourierMask, InpaintMask };

class LinearOperator : public LinearMap {
public:
    // mask is [H,W] with 0/1 entries; sigma is the per-component noise std
    // of the acquisition model this operator is paired with.
    LinearOperator(OperatorKind kind, Tensor mask, double sigma = 0.0)
        : kind_(kind), mask_(std::move(mask)), sigma_(sigma) {
        if (mask_.rank() != 2) throw ShapeError("LinearOperator: mask must be [H,W]");
        h_ = mask_.extent(0);
        w_ = mask_.extent(1);
        for (std::size_t i = 0; i < mask_.size(); ++i)
            if (mask_[i] != 0.0 && mask_[i] != 1.0)
                throw ShapeError("LinearOperator: mask entries must be 0 or 1");
        if (kind_ == OperatorKind::FourierMask) {
            plan_rows_ = std::make_shared<DftPlan>(w_);
            plan_cols_ = (h_ == w_) ? plan_rows_ : std::make_shared<DftPlan>(h_);
        }
    }

    OperatorKind kind() const { return kind_; }
    const Tensor& mask() const { return mask_; }
    std::size_t height() const { return h_; }
    std::size_t width() const { return w_; }
    double sigma() const { return sigma_; }

    std::size_t sampled_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < mask_.size(); ++i) n += mask_[i] != 0.0;
        return n;
    }

    Tensor apply(const Tensor& x) const override {
        check_image(x, "apply");
        if (kind_ == OperatorKind::InpaintMask) return masked_copy(x);
        Tensor y = x;
        fft2(y, false);
        mask_in_place(y);
        return y;
    }

    Tensor adjoint(const Tensor& y) const override {
        check_image(y, "adjoint");
        if (kind_ == OperatorKind::InpaintMask) return masked_copy(y);
        Tensor x = masked_copy(y);
        fft2(x, true);
        return x;
    }

    // AᴴA; for both kinds this is an orthogonal projector.
    Tensor normal(const Tensor& x) const {
        if (kind_ == OperatorKind::InpaintMask) return masked_copy(x);
        return adjoint(apply(x));
    }

private:
    void check_image(const Tensor& t, const char* where) const {
        if (t.rank() != 3 || t.extent(0) != 2 || t.extent(1) != h_ || t.extent(2) != w_)
            throw ShapeError(std::string("LinearOperator::") + where + ": need [2," +
                             std::to_string(h_) + "," + std::to_string(w_) + "], got " +
                             t.shape_str());
    }

    Tensor masked_copy(const Tensor& t) const {
        Tensor r = t;
        mask_in_place(r);
        return r;
    }

    void mask_in_place(Tensor& t) const {
        double* re = t.data();
        double* im = t.data() + h_ * w_;
        for (std::size_t i = 0; i < h_ * w_; ++i) {
            re[i] *= mask_[i];
            im[i] *= mask_[i];
        }
    }

    // Rolls each channel plane so src index i lands at (i + shift) mod n
    // per axis. fftshift is (n/2, w/2); ifftshift is the inverse roll.
    void roll_planes(Tensor& t, std::size_t sy, std::size_t sx) const {
        std::vector<double> tmp(h_ * w_);
        for (std::size_t c = 0; c < 2; ++c) {
            double* plane = t.data() + c * h_ * w_;
            for (std::size_t y = 0; y < h_; ++y) {
                const std::size_t yy = (y + sy) % h_;
                for (std::size_t x = 0; x < w_; ++x) tmp[yy * w_ + (x + sx) % w_] = plane[y * w_ + x];
            }
            std::copy(tmp.begin(), tmp.end(), plane);
        }
    }

    // Centered unitary 2-D DFT over the two channel planes:
    // fftshift o F o ifftshift with 1/sqrt(HW) both ways. The shifts are
    // mutually inverse permutations, so forward and inverse stay exact
    // adjoints of each other.
    void fft2(Tensor& t, bool inverse) const {
        roll_planes(t, h_ - h_ / 2, w_ - w_ / 2);  // ifftshift
        double* re = t.data();
        double* im = t.data() + h_ * w_;
        for (std::size_t y = 0; y < h_; ++y)
            plan_rows_->transform(re + y * w_, im + y * w_, inverse);
        std::vector<double> cr(h_), ci(h_);
        for (std::size_t x = 0; x < w_; ++x) {
            for (std::size_t y = 0; y < h_; ++y) {
                cr[y] = re[y * w_ + x];
                ci[y] = im[y * w_ + x];
            }
            plan_cols_->transform(cr.data(), ci.data(), inverse);
            for (std::size_t y = 0; y < h_; ++y) {
                re[y * w_ + x] = cr[y];
                im[y * w_ + x] = ci[y];
            }
        }
        roll_planes(t, h_ / 2, w_ / 2);  // fftshift
        const double s = 1.0 / std::sqrt(static_cast<double>(h_ * w_));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] *= s;
    }

    OperatorKind kind_;
    Tensor mask_;
    double sigma_;
    std::size_t h_ = 0, w_ = 0;
    std::shared_ptr<DftPlan> plan_rows_, plan_cols_;
};

}  // namespace suredip
