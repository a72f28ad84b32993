// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "suredip/cli/experiment.hpp"

using namespace suredip;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

ExperimentConfig tiny_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.height = 16;
    cfg.width = 16;
    cfg.phase_amplitude = 0.2;
    cfg.mask.kind = MaskKind::Vd2d;
    cfg.mask.acceleration = 2.0;
    cfg.mask.calib = 4;
    cfg.mask.seed = 3;
    cfg.sigma = 0.02;
    cfg.noise_seed = 8;
    cfg.arch = ArchKind::Denoiser;
    cfg.hyper.hidden = 4;
    cfg.loss = LossKind::Gsure;
    cfg.epochs = 4;
    cfg.seeds = {1, 2};
    cfg.out_dir = out_dir;
    cfg.quiet = true;
    return cfg;
}

}  // namespace

TEST_CASE("config: missing sigma names the field") {
    write_file("bad_config.json", "{ \"epochs\": 10 }");
    try {
        load_config("bad_config.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("sigma") != std::string::npos);
        REQUIRE(e.field == "sigma");
    }
    std::remove("bad_config.json");
}

TEST_CASE("config: malformed json and unknown enums are config errors") {
    write_file("broken.json", "{ not json");
    REQUIRE_THROWS_AS(load_config("broken.json"), ConfigError);
    std::remove("broken.json");

    write_file("bad_enum.json", R"({"sigma": 0.01, "mask": {"kind": "spiral"}})");
    REQUIRE_THROWS_AS(load_config("bad_enum.json"), ConfigError);
    std::remove("bad_enum.json");

    REQUIRE_THROWS_AS(load_config("no_such_file.json"), ConfigError);
}

TEST_CASE("config: json with comments parses and rounds defaults") {
    write_file("ok.json", R"(// comment
{
  "sigma": 0.05,            // inline comment
  "network": {"arch": "denoiser", "hidden_width": 4},
  "epochs": 3
})");
    ExperimentConfig cfg = load_config("ok.json");
    REQUIRE(cfg.sigma == 0.05);
    REQUIRE(cfg.arch == ArchKind::Denoiser);
    REQUIRE(cfg.epochs == 3);
    REQUIRE(cfg.mask.kind == MaskKind::Vd2d);  // default
    std::remove("ok.json");
}

TEST_CASE("recon: epochs=1 writes a csv with header plus one row") {
    ExperimentConfig cfg = tiny_config("cli_recon_one");
    cfg.epochs = 1;
    cfg.seeds = {7};
    std::ostringstream log;
    REQUIRE(run_recon(cfg, log) == 0);
    const std::string csv = slurp("cli_recon_one/seed7/trace.csv");
    REQUIRE(csv.rfind("epoch,loss,data_term,divergence,psnr\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 2);
    std::filesystem::remove_all("cli_recon_one");
}

TEST_CASE("recon: rerun with an identical config is byte-identical") {
    ExperimentConfig a = tiny_config("cli_det_a");
    ExperimentConfig b = tiny_config("cli_det_b");
    std::ostringstream log;
    REQUIRE(run_recon(a, log) == 0);
    REQUIRE(run_recon(b, log) == 0);
    for (const char* rel :
         {"/seed1/trace.csv", "/seed2/trace.csv", "/summary.csv", "/config_resolved.json"}) {
        INFO(rel);
        std::string fa = slurp("cli_det_a" + std::string(rel));
        // The resolved config embeds out_dir; normalize it.
        std::string fb = slurp("cli_det_b" + std::string(rel));
        if (std::string(rel) == "/config_resolved.json") {
            const auto fix = [](std::string s, const char* from) {
                const auto p = s.find(from);
                if (p != std::string::npos) s.erase(p, std::string(from).size());
                return s;
            };
            fa = fix(fa, "cli_det_a");
            fb = fix(fb, "cli_det_b");
        }
        REQUIRE(fa == fb);
    }
    std::filesystem::remove_all("cli_det_a");
    std::filesystem::remove_all("cli_det_b");
}

TEST_CASE("compare: baselines-only config yields two summary rows") {
    ExperimentConfig cfg = tiny_config("cli_cmp_base");
    cfg.compare_methods = {"tv", "wavelet_l1"};
    cfg.baseline_grid = {1e-3, 1e-2};
    cfg.tv_iters = 20;
    cfg.wavelet_iters = 30;
    std::ostringstream log;
    REQUIRE(run_compare(cfg, log) == 0);
    const std::string csv = slurp("cli_cmp_base/summary.csv");
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2
    REQUIRE(csv.find("tv,") != std::string::npos);
    REQUIRE(csv.find("wavelet_l1,") != std::string::npos);
    std::filesystem::remove_all("cli_cmp_base");
}

TEST_CASE("compare: all six methods yield six rows with finite psnr") {
    ExperimentConfig cfg = tiny_config("cli_cmp_six");
    cfg.hyper.hidden = 2;
    cfg.hyper.unroll_steps = 2;
    cfg.hyper.dc_cg_steps = 4;
    cfg.epochs = 2;
    cfg.seeds = {5};
    cfg.baseline_grid = {1e-3, 1e-2};
    cfg.tv_iters = 15;
    cfg.wavelet_iters = 20;
    std::ostringstream log;
    REQUIRE(run_compare(cfg, log) == 0);

    std::ifstream f("cli_cmp_six/summary.csv");
    std::string line;
    std::getline(f, line);  // header
    int rows = 0;
    while (std::getline(f, line)) {
        ++rows;
        // method,seed,final,best,... -> final psnr is field 3
        std::istringstream ss(line);
        std::string method, seed, final_psnr;
        std::getline(ss, method, ',');
        std::getline(ss, seed, ',');
        std::getline(ss, final_psnr, ',');
        REQUIRE(std::isfinite(std::stod(final_psnr)));
    }
    REQUIRE(rows == 6);
    std::filesystem::remove_all("cli_cmp_six");
}

TEST_CASE("sure-check: passes with the correct weight, fails the negative control") {
    ExperimentConfig cfg;
    cfg.sigma = 0.01;
    cfg.noise_seed = 5;
    cfg.gsure.probe_seed = 11;
    std::ostringstream log;
    REQUIRE(run_sure_check(cfg, log) == 0);
    REQUIRE(log.str().find("[FAIL]") == std::string::npos);

    ExperimentConfig neg = cfg;
    neg.gsure.weight_scale = 0.0;  // drops the divergence term
    std::ostringstream nlog;
    REQUIRE(run_sure_check(neg, nlog) == 1);
    REQUIRE(nlog.str().find("[FAIL]") != std::string::npos);
}

TEST_CASE("compare: summary rows match individual recon runs under the same seeds") {
    ExperimentConfig cfg = tiny_config("cli_cmp_net");
    cfg.compare_methods = {"gsure-unet"};
    cfg.arch = ArchKind::Unet;
    cfg.hyper.hidden = 2;
    cfg.epochs = 3;
    cfg.seeds = {4};
    std::ostringstream log;
    REQUIRE(run_compare(cfg, log) == 0);

    ExperimentConfig rcfg = cfg;
    rcfg.out_dir = "cli_cmp_net_recon";
    rcfg.loss = LossKind::Gsure;
    REQUIRE(run_recon(rcfg, log) == 0);

    REQUIRE(slurp("cli_cmp_net/gsure-unet/seed4/trace.csv") ==
            slurp("cli_cmp_net_recon/seed4/trace.csv"));
    std::filesystem::remove_all("cli_cmp_net");
    std::filesystem::remove_all("cli_cmp_net_recon");
}

TEST_CASE("cli binary: exit codes for good and malformed configs") {
    write_file("cli_good.json",
               R"({"sigma": 0.02, "phantom": {"height": 16, "width": 16},
                   "mask": {"kind": "vd2d", "acceleration": 2.0, "calib": 4, "seed": 3},
                   "network": {"arch": "denoiser", "hidden_width": 3},
                   "epochs": 2, "seeds": [1], "out_dir": "cli_bin_out"})");
    const std::string exe = SUREDIP_CLI_PATH;
    REQUIRE(std::system((exe + " --quiet recon cli_good.json").c_str()) == 0);
    REQUIRE(std::filesystem::exists("cli_bin_out/seed1/trace.csv"));
    REQUIRE(std::filesystem::exists("cli_bin_out/seed1/checkpoint.sdt1"));

    write_file("cli_bad.json", R"({"epochs": 2})");
    const int rc = std::system((exe + " recon cli_bad.json 2>/dev/null").c_str());
    REQUIRE(WEXITSTATUS(rc) == 2);

    // --seed-override narrows the run to one seed.
    REQUIRE(std::system(
                (exe + " --quiet --seed-override 9 --out-dir cli_bin_out2 recon cli_good.json")
                    .c_str()) == 0);
    REQUIRE(std::filesystem::exists("cli_bin_out2/seed9/trace.csv"));
    REQUIRE_FALSE(std::filesystem::exists("cli_bin_out2/seed1"));

    std::remove("cli_good.json");
    std::remove("cli_bad.json");
    std::filesystem::remove_all("cli_bin_out");
    std::filesystem::remove_all("cli_bin_out2");
}
