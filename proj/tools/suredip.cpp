// SPDX-License-Identifier: Apache-2.0
//
// suredip CLI: single-shot reconstruction experiments.
//   suredip recon <config>       fit one (architecture, loss) per seed
//   suredip compare <config>     method comparison matrix + tuned baselines
//   suredip sure-check <config>  statistical validation of the GSURE path
// Exit codes: 0 success, 1 run/check failure, 2 malformed config.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "suredip/cli/experiment.hpp"

namespace {

struct GlobalFlags {
    std::string out_dir_override;
    std::uint64_t seed_override = 0;
    bool has_seed_override = false;
    bool quiet = false;
};

suredip::ExperimentConfig load_with_overrides(const std::string& path, const GlobalFlags& g) {
    suredip::ExperimentConfig cfg = suredip::load_config(path);
    if (!g.out_dir_override.empty()) cfg.out_dir = g.out_dir_override;
    if (g.has_seed_override) cfg.seeds = {g.seed_override};
    cfg.quiet = g.quiet;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-shot image reconstruction with DIP and projected-GSURE losses"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--out-dir", flags.out_dir_override, "override the config's output directory");
    auto* seed_opt =
        app.add_option("--seed-override", flags.seed_override, "run a single seed instead of the config list");
    app.add_flag("--quiet", flags.quiet, "suppress progress logging");

    std::string recon_cfg, compare_cfg, check_cfg;
    CLI::App* recon = app.add_subcommand("recon", "fit the configured network to one measurement");
    recon->add_option("config", recon_cfg, "experiment config file")->required();
    CLI::App* compare = app.add_subcommand("compare", "run the method comparison matrix");
    compare->add_option("config", compare_cfg, "experiment config file")->required();
    CLI::App* check = app.add_subcommand("sure-check", "run the GSURE statistical validation suite");
    check->add_option("config", check_cfg, "experiment config file")->required();

    CLI11_PARSE(app, argc, argv);
    flags.has_seed_override = seed_opt->count() > 0;

    try {
        if (recon->parsed())
            return suredip::run_recon(load_with_overrides(recon_cfg, flags), std::cout);
        if (compare->parsed())
            return suredip::run_compare(load_with_overrides(compare_cfg, flags), std::cout);
        if (check->parsed())
            return suredip::run_sure_check(load_with_overrides(check_cfg, flags), std::cout);
    } catch (const suredip::ConfigError& e) {
        std::cerr << "config error: " << e.what();
        if (!e.field.empty()) std::cerr << " (field: " << e.field << ")";
        std::cerr << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
