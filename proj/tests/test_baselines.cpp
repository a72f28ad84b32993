// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "suredip/baselines/baselines.hpp"
#include "suredip/core/rng.hpp"
#include "suredip/operators/cg.hpp"
#include "suredip/simdata/masks.hpp"
#include "suredip/simdata/measure.hpp"
#include "suredip/simdata/phantom.hpp"

using namespace suredip;

namespace {

Tensor ones_mask(std::size_t h, std::size_t w) {
    Tensor m({h, w});
    m.fill(1.0);
    return m;
}

}  // namespace

TEST_CASE("haar transform is orthonormal") {
    Rng rng(3);
    Tensor x = rng.normal_tensor({2, 16, 16});
    Tensor c = haar_forward(x);
    REQUIRE(norm2(c) == Catch::Approx(norm2(x)).margin(1e-12));
    Tensor back = haar_inverse(c);
    for (std::size_t i = 0; i < x.size(); ++i)
        REQUIRE(back[i] == Catch::Approx(x[i]).margin(1e-12));

    REQUIRE_THROWS_AS(haar_forward(Tensor({2, 12, 16})), ShapeError);
}

TEST_CASE("wavelet ISTA: denoising matches the one-step closed form") {
    Rng rng(7);
    LinearOperator op(OperatorKind::InpaintMask, ones_mask(8, 8));
    Tensor y = rng.normal_tensor({2, 8, 8});
    BaselineConfig cfg;
    cfg.method = BaselineMethod::WaveletL1;
    cfg.reg_weight = 0.25;
    cfg.iters = 6;
    BaselineResult res = wavelet_l1_recon(op, y, cfg);

    Tensor c = haar_forward(y);
    detail::soft_threshold(c, cfg.reg_weight / 2.0);
    Tensor closed = haar_inverse(c);
    for (std::size_t i = 0; i < closed.size(); ++i)
        REQUIRE(res.image[i] == Catch::Approx(closed[i]).margin(1e-10));
}

TEST_CASE("wavelet ISTA: objective is monotone non-increasing") {
    Rng rng(11);
    MaskSpec spec;
    spec.kind = MaskKind::Vd2d;
    spec.acceleration = 4.0;
    spec.calib = 4;
    spec.seed = 5;
    LinearOperator op(OperatorKind::FourierMask, make_mask(spec, 16, 16));
    Phantom ph = make_phantom("shepp_logan", 16, 16, 0.2);
    Tensor y = measure(ph, op, 0.05, 2);

    BaselineConfig cfg;
    cfg.method = BaselineMethod::WaveletL1;
    cfg.reg_weight = 0.02;
    cfg.iters = 80;
    BaselineResult res = wavelet_l1_recon(op, y, cfg);
    for (std::size_t i = 1; i < res.objective.size(); ++i)
        REQUIRE(res.objective[i] <= res.objective[i - 1] + 1e-8 * (1.0 + res.objective[i - 1]));
}

TEST_CASE("both baselines reduce to the least-squares image at zero regularization") {
    MaskSpec spec;
    spec.kind = MaskKind::Cartesian1d;
    spec.acceleration = 2.0;
    spec.calib = 4;
    spec.seed = 13;
    LinearOperator op(OperatorKind::FourierMask, make_mask(spec, 16, 16));
    Phantom ph = make_phantom("shepp_logan", 16, 16, 0.3);
    Tensor y = measure(ph, op, 0.01, 9);
    Tensor xls = least_squares_image(op, y, CgConfig{});

    BaselineConfig wcfg;
    wcfg.method = BaselineMethod::WaveletL1;
    wcfg.reg_weight = 0.0;
    wcfg.iters = 30;
    BaselineResult wres = wavelet_l1_recon(op, y, wcfg);
    for (std::size_t i = 0; i < xls.size(); ++i)
        REQUIRE(wres.image[i] == Catch::Approx(xls[i]).margin(1e-6));

    BaselineConfig tcfg;
    tcfg.method = BaselineMethod::Tv;
    tcfg.reg_weight = 0.0;
    tcfg.iters = 60;
    tcfg.rho = 1.0;
    BaselineResult tres = tv_recon(op, y, tcfg);
    for (std::size_t i = 0; i < xls.size(); ++i)
        REQUIRE(tres.image[i] == Catch::Approx(xls[i]).margin(1e-6));
}

TEST_CASE("tv: pure least squares on a full mask at mu=0") {
    Rng rng(17);
    LinearOperator op(OperatorKind::FourierMask, ones_mask(8, 8));
    Tensor y = rng.normal_tensor({2, 8, 8});
    BaselineConfig cfg;
    cfg.method = BaselineMethod::Tv;
    cfg.reg_weight = 0.0;
    cfg.rho = 0.05;  // free parameter at mu=0; small rho contracts fastest
    cfg.iters = 40;
    BaselineResult res = tv_recon(op, y, cfg);
    Tensor aty = op.adjoint(y);
    for (std::size_t i = 0; i < aty.size(); ++i)
        REQUIRE(res.image[i] == Catch::Approx(aty[i]).margin(1e-8));
}

TEST_CASE("tv: huge regularization flattens a denoising problem") {
    LinearOperator op(OperatorKind::InpaintMask, ones_mask(16, 16));
    Phantom ph = make_phantom("blobs", 16, 16, 0.0);
    Tensor y = measure(ph, op, 0.02, 21);

    BaselineConfig cfg;
    cfg.method = BaselineMethod::Tv;
    cfg.reg_weight = 100.0;
    cfg.rho = 100.0;
    cfg.iters = 300;
    BaselineResult res = tv_recon(op, y, cfg);
    const double grad_max =
        std::max(max_abs(detail::diff_h(res.image)), max_abs(detail::diff_v(res.image)));
    REQUIRE(grad_max < 1e-3);
}

TEST_CASE("tv: primal residual trend decreases and objective does not climb") {
    MaskSpec spec;
    spec.kind = MaskKind::Vd2d;
    spec.acceleration = 4.0;
    spec.calib = 4;
    spec.seed = 23;
    LinearOperator op(OperatorKind::FourierMask, make_mask(spec, 16, 16));
    Phantom ph = make_phantom("shepp_logan", 16, 16, 0.1);
    Tensor y = measure(ph, op, 0.02, 31);

    BaselineConfig cfg;
    cfg.method = BaselineMethod::Tv;
    cfg.reg_weight = 0.05;
    cfg.rho = 0.5;
    cfg.iters = 120;
    BaselineResult res = tv_recon(op, y, cfg);
    REQUIRE(res.primal_residual.back() < 1e-2 * res.primal_residual.front());
    REQUIRE(res.objective.back() <= res.objective.front());
    // The tail should be settled even if early ADMM iterations oscillate.
    for (std::size_t i = res.objective.size() / 2; i < res.objective.size(); ++i)
        REQUIRE(res.objective[i] <= res.objective[i - 1] + 1e-6 * (1.0 + res.objective[i - 1]));
}

TEST_CASE("tv: 1-D denoising matches an exhaustive piecewise-constant search") {
    // 8-sample circular signal, real channel only; the oracle enumerates
    // every circular segmentation into <= 3 arcs with levels on a grid.
    const double data[8] = {1.02, 0.98, 1.01, -0.49, -0.52, -0.48, 0.81, 0.78};
    Tensor y({2, 1, 8});
    for (std::size_t i = 0; i < 8; ++i) y[i] = data[i];

    LinearOperator op(OperatorKind::InpaintMask, ones_mask(1, 8));
    BaselineConfig cfg;
    cfg.method = BaselineMethod::Tv;
    cfg.reg_weight = 0.3;
    cfg.rho = 1.0;
    cfg.iters = 400;
    BaselineResult res = tv_recon(op, y, cfg);
    const double obj_admm = tv_objective(op, res.image, y, cfg.reg_weight);

    // Grid search oracle.
    double lo = data[0], hi = data[0];
    for (double v : data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    lo -= 0.1;
    hi += 0.1;
    const int levels = 41;
    auto level_at = [&](int g) { return lo + (hi - lo) * g / (levels - 1); };
    const double mu = cfg.reg_weight;

    auto segment_objective = [&](const std::vector<int>& cuts, const std::vector<double>& vals) {
        // cuts[k] is the start of segment k; segment k covers
        // [cuts[k], cuts[k+1]) circularly.
        double obj = 0.0;
        const std::size_t k = cuts.size();
        for (std::size_t s = 0; s < k; ++s) {
            const int start = cuts[s];
            const int stop = cuts[(s + 1) % k] + (s + 1 == k ? 8 : 0);
            for (int i = start; i < stop; ++i) {
                const double d = vals[s] - data[i % 8];
                obj += d * d;
            }
        }
        if (k > 1)
            for (std::size_t s = 0; s < k; ++s) obj += mu * std::abs(vals[s] - vals[(s + 1) % k]);
        return obj;
    };

    double best = 1e300;
    // One arc.
    for (int g = 0; g < levels; ++g)
        best = std::min(best, segment_objective({0}, {level_at(g)}));
    // Two arcs.
    for (int c1 = 0; c1 < 8; ++c1)
        for (int c2 = c1 + 1; c2 < 8; ++c2)
            for (int g1 = 0; g1 < levels; ++g1)
                for (int g2 = 0; g2 < levels; ++g2)
                    best = std::min(best,
                                    segment_objective({c1, c2}, {level_at(g1), level_at(g2)}));
    // Three arcs.
    for (int c1 = 0; c1 < 8; ++c1)
        for (int c2 = c1 + 1; c2 < 8; ++c2)
            for (int c3 = c2 + 1; c3 < 8; ++c3)
                for (int g1 = 0; g1 < levels; ++g1)
                    for (int g2 = 0; g2 < levels; ++g2)
                        for (int g3 = 0; g3 < levels; ++g3)
                            best = std::min(
                                best, segment_objective({c1, c2, c3},
                                                        {level_at(g1), level_at(g2), level_at(g3)}));

    REQUIRE(std::abs(obj_admm - best) <= 1e-2);
}

TEST_CASE("baseline config validation") {
    BaselineConfig cfg;
    cfg.reg_weight = -1.0;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg.reg_weight = 0.1;
    cfg.iters = 0;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);

    // Non-power-of-two extents are rejected by the wavelet path.
    LinearOperator op(OperatorKind::InpaintMask, ones_mask(12, 12));
    Tensor y({2, 12, 12});
    BaselineConfig w;
    w.method = BaselineMethod::WaveletL1;
    REQUIRE_THROWS_AS(wavelet_l1_recon(op, y, w), ShapeError);
}
