// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: a single JSON file (// comments allowed) with
// nested sections. Key names are frozen and documented in the README; an
// annotated example ships in configs/. Validation is total: every field is
// checked against its owning module's invariants before any run starts, and
// a malformed file reports the offending field.
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "suredip/baselines/baselines.hpp"
#include "suredip/losses/gsure.hpp"
#include "suredip/models/network.hpp"
#include "suredip/simdata/masks.hpp"
#include "suredip/trainer/fit.hpp"

namespace suredip {

struct ExperimentConfig {
    // phantom
    std::string phantom_name = "shepp_logan";
    std::size_t height = 64;
    std::size_t width = 64;
    double phase_amplitude = 0.3;

    // sampling + acquisition
    MaskSpec mask;
    OperatorKind op_kind = OperatorKind::FourierMask;
    double sigma = -1.0;  // mandatory; negative means "not provided"
    std::uint64_t noise_seed = 0;

    // model + loss + optimizer
    ArchKind arch = ArchKind::Unet;
    NetworkHyper hyper;
    LossKind loss = LossKind::Gsure;
    GsureConfig gsure;
    OptimConfig optim;
    int epochs = 1000;
    std::vector<std::uint64_t> seeds = {1};

    std::string out_dir = "runs/out";
    bool quiet = false;

    // compare
    std::vector<std::string> compare_methods = {"dip-unet",      "gsure-unet", "dip-unrolled",
                                                "gsure-unrolled", "tv",         "wavelet_l1"};
    std::vector<double> baseline_grid = {3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    int tv_iters = 60;
    double tv_rho = 0.5;
    int wavelet_iters = 150;

    void validate() const {
        if (sigma < 0.0)
            throw ConfigError("config: mandatory field 'sigma' is missing or negative", "sigma");
        if (height < 16 || width < 16)
            throw ConfigError("config: phantom extents must be >= 16", "phantom.height");
        if (epochs < 1) throw ConfigError("config: epochs must be >= 1", "epochs");
        if (seeds.empty()) throw ConfigError("config: seeds must be non-empty", "seeds");
        if (mask.acceleration < 1.0)
            throw ConfigError("config: acceleration must be >= 1", "mask.acceleration");
        if (hyper.hidden < 1) throw ConfigError("config: hidden_width must be >= 1",
                                                "network.hidden_width");
        if (hyper.unroll_steps < 1)
            throw ConfigError("config: unroll_steps must be >= 1", "network.unroll_steps");
        if (hyper.dc_cg_steps < 1)
            throw ConfigError("config: dc_cg_steps must be >= 1", "network.dc_cg_steps");
        if (optim.lr <= 0.0) throw ConfigError("config: lr must be > 0", "optimizer.lr");
        gsure.validate();
        for (const std::string& m : compare_methods)
            if (m != "dip-unet" && m != "gsure-unet" && m != "dip-unrolled" &&
                m != "gsure-unrolled" && m != "tv" && m != "wavelet_l1")
                throw ConfigError("config: unknown compare method '" + m + "'",
                                  "compare.methods");
        if (tv_iters < 1 || wavelet_iters < 1)
            throw ConfigError("config: baseline iters must be >= 1", "baselines");
        for (double g : baseline_grid)
            if (g < 0.0) throw ConfigError("config: baseline grid weights must be >= 0",
                                           "baselines.grid");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["phantom"] = {{"name", phantom_name},
                        {"height", height},
                        {"width", width},
                        {"phase_amplitude", phase_amplitude}};
        const char* mk = mask.kind == MaskKind::Vd2d        ? "vd2d"
                         : mask.kind == MaskKind::Cartesian1d ? "cartesian1d"
                                                              : "full";
        j["mask"] = {{"kind", mk},
                     {"acceleration", mask.acceleration},
                     {"calib", mask.calib},
                     {"seed", mask.seed}};
        j["operator"] = op_kind == OperatorKind::FourierMask ? "fourier_mask" : "inpaint_mask";
        j["sigma"] = sigma;
        j["noise_seed"] = noise_seed;
        j["network"] = {{"arch", arch_name(arch)},
                        {"hidden_width", hyper.hidden},
                        {"unroll_steps", hyper.unroll_steps},
                        {"dc_cg_steps", hyper.dc_cg_steps},
                        {"lambda_dc_init", hyper.lambda_dc_init}};
        j["loss"] = loss_name(loss);
        j["gsure"] = {{"eps", gsure.eps},
                      {"probes", gsure.probes},
                      {"probe_seed", gsure.probe_seed},
                      {"divergence_weight",
                       gsure.weight_mode == DivWeightMode::TwoSigmaSq ? "two_sigma_sq" : "two"},
                      {"weight_scale", gsure.weight_scale}};
        j["cg"] = {{"lambda", gsure.cg.lambda},
                   {"tol", gsure.cg.tol},
                   {"max_iter", gsure.cg.max_iter}};
        j["optimizer"] = {{"lr", optim.lr},
                          {"beta1", optim.beta1},
                          {"beta2", optim.beta2},
                          {"eps", optim.eps}};
        j["epochs"] = epochs;
        j["seeds"] = seeds;
        j["out_dir"] = out_dir;
        j["compare"] = {{"methods", compare_methods}};
        j["baselines"] = {{"grid", baseline_grid},
                          {"tv", {{"iters", tv_iters}, {"rho", tv_rho}}},
                          {"wavelet", {{"iters", wavelet_iters}}}};
        return j;
    }
};

namespace detail {

template <typename T>
T field_as(const nlohmann::json& j, const std::string& section, const std::string& key,
           const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: bad value for field '" + section + key + "': " + e.what(),
                          section + key);
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail::field_as;
    ExperimentConfig c;
    if (j.contains("phantom")) {
        const auto& p = j.at("phantom");
        c.phantom_name = field_as<std::string>(p, "phantom.", "name", c.phantom_name);
        c.height = field_as<std::size_t>(p, "phantom.", "height", c.height);
        c.width = field_as<std::size_t>(p, "phantom.", "width", c.width);
        c.phase_amplitude = field_as<double>(p, "phantom.", "phase_amplitude", c.phase_amplitude);
    }
    if (j.contains("mask")) {
        const auto& m = j.at("mask");
        const std::string kind = field_as<std::string>(m, "mask.", "kind", "vd2d");
        if (kind == "vd2d") c.mask.kind = MaskKind::Vd2d;
        else if (kind == "cartesian1d") c.mask.kind = MaskKind::Cartesian1d;
        else if (kind == "full") c.mask.kind = MaskKind::Full;
        else throw ConfigError("config: unknown mask kind '" + kind + "'", "mask.kind");
        c.mask.acceleration = field_as<double>(m, "mask.", "acceleration", c.mask.acceleration);
        c.mask.calib = field_as<std::size_t>(m, "mask.", "calib", c.mask.calib);
        c.mask.seed = field_as<std::uint64_t>(m, "mask.", "seed", c.mask.seed);
    }
    if (j.contains("operator")) {
        const std::string k = j.at("operator").get<std::string>();
        if (k == "fourier_mask") c.op_kind = OperatorKind::FourierMask;
        else if (k == "inpaint_mask") c.op_kind = OperatorKind::InpaintMask;
        else throw ConfigError("config: unknown operator '" + k + "'", "operator");
    }
    c.sigma = field_as<double>(j, "", "sigma", c.sigma);
    c.noise_seed = field_as<std::uint64_t>(j, "", "noise_seed", c.noise_seed);
    if (j.contains("network")) {
        const auto& n = j.at("network");
        c.arch = arch_from_name(field_as<std::string>(n, "network.", "arch", "unet"));
        c.hyper.hidden = field_as<std::size_t>(n, "network.", "hidden_width", c.hyper.hidden);
        c.hyper.unroll_steps =
            field_as<std::size_t>(n, "network.", "unroll_steps", c.hyper.unroll_steps);
        c.hyper.dc_cg_steps =
            field_as<std::size_t>(n, "network.", "dc_cg_steps", c.hyper.dc_cg_steps);
        c.hyper.lambda_dc_init =
            field_as<double>(n, "network.", "lambda_dc_init", c.hyper.lambda_dc_init);
    }
    if (j.contains("loss")) {
        const std::string k = j.at("loss").get<std::string>();
        if (k == "dip") c.loss = LossKind::Dip;
        else if (k == "gsure") c.loss = LossKind::Gsure;
        else throw ConfigError("config: unknown loss '" + k + "'", "loss");
    }
    if (j.contains("gsure")) {
        const auto& g = j.at("gsure");
        c.gsure.eps = field_as<double>(g, "gsure.", "eps", c.gsure.eps);
        c.gsure.probes = field_as<int>(g, "gsure.", "probes", c.gsure.probes);
        c.gsure.probe_seed = field_as<std::uint64_t>(g, "gsure.", "probe_seed", c.gsure.probe_seed);
        const std::string w =
            field_as<std::string>(g, "gsure.", "divergence_weight", "two_sigma_sq");
        if (w == "two_sigma_sq") c.gsure.weight_mode = DivWeightMode::TwoSigmaSq;
        else if (w == "two") c.gsure.weight_mode = DivWeightMode::LiteralTwo;
        else throw ConfigError("config: unknown divergence_weight '" + w + "'",
                               "gsure.divergence_weight");
        c.gsure.weight_scale = field_as<double>(g, "gsure.", "weight_scale", c.gsure.weight_scale);
    }
    if (j.contains("cg")) {
        const auto& cg = j.at("cg");
        c.gsure.cg.lambda = field_as<double>(cg, "cg.", "lambda", c.gsure.cg.lambda);
        c.gsure.cg.tol = field_as<double>(cg, "cg.", "tol", c.gsure.cg.tol);
        c.gsure.cg.max_iter = field_as<int>(cg, "cg.", "max_iter", c.gsure.cg.max_iter);
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        c.optim.lr = field_as<double>(o, "optimizer.", "lr", c.optim.lr);
        c.optim.beta1 = field_as<double>(o, "optimizer.", "beta1", c.optim.beta1);
        c.optim.beta2 = field_as<double>(o, "optimizer.", "beta2", c.optim.beta2);
        c.optim.eps = field_as<double>(o, "optimizer.", "eps", c.optim.eps);
    }
    c.epochs = field_as<int>(j, "", "epochs", c.epochs);
    c.seeds = field_as<std::vector<std::uint64_t>>(j, "", "seeds", c.seeds);
    c.out_dir = field_as<std::string>(j, "", "out_dir", c.out_dir);
    if (j.contains("compare")) {
        c.compare_methods = field_as<std::vector<std::string>>(j.at("compare"), "compare.",
                                                               "methods", c.compare_methods);
    }
    if (j.contains("baselines")) {
        const auto& b = j.at("baselines");
        c.baseline_grid = field_as<std::vector<double>>(b, "baselines.", "grid", c.baseline_grid);
        if (b.contains("tv")) {
            c.tv_iters = field_as<int>(b.at("tv"), "baselines.tv.", "iters", c.tv_iters);
            c.tv_rho = field_as<double>(b.at("tv"), "baselines.tv.", "rho", c.tv_rho);
        }
        if (b.contains("wavelet"))
            c.wavelet_iters =
                field_as<int>(b.at("wavelet"), "baselines.wavelet.", "iters", c.wavelet_iters);
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'", path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f, nullptr, /*allow_exceptions=*/true,
                                  /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: parse error in '" + path + "': " + e.what(), path);
    }
    return parse_config(j);
}

}  // namespace suredip
