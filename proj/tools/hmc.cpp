// Command-line front end: sample, figure, scaling, selftest.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hmc/hmc.hpp"

namespace {

struct SharedFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void add_shared(CLI::App* cmd, SharedFlags& f) {
    cmd->add_option("--config", f.config, "key = value settings file");
    cmd->add_option("--seed", f.seed, "random seed (required)");
    cmd->add_option("--out", f.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hamiltonian Monte Carlo experiments"};
    app.require_subcommand(1);

    SharedFlags sample_flags, figure_flags, scaling_flags;

    auto* sample = app.add_subcommand("sample", "run a chain and write chain.csv and summary.csv");
    add_shared(sample, sample_flags);
    std::optional<std::string> kernel, target;
    std::optional<long> iters, steps_lo, steps_hi, window;
    std::optional<double> eps_lo, eps_hi, alpha_temp, alpha_ref;
    sample->add_option("--kernel", kernel, "hmc, rwm, lmc, ghmc, windowed or tempered");
    sample->add_option("--target", target, "gauss1d, gauss2d_95, gauss2d_98, gauss100d or mixture_fig9");
    sample->add_option("--iters", iters, "iterations");
    sample->add_option("--epsilon-lo", eps_lo, "smallest stepsize (or proposal sd)");
    sample->add_option("--epsilon-hi", eps_hi, "largest stepsize (or proposal sd)");
    sample->add_option("--steps-lo", steps_lo, "fewest leapfrog steps");
    sample->add_option("--steps-hi", steps_hi, "most leapfrog steps");
    sample->add_option("--window", window, "window size for windowed HMC");
    sample->add_option("--alpha-temp", alpha_temp, "tempering factor");
    sample->add_option("--alpha-ref", alpha_ref, "momentum refresh coefficient");

    auto* figure = app.add_subcommand("figure", "write the series behind a figure");
    add_shared(figure, figure_flags);
    std::string figure_id;
    figure->add_option("figure_id", figure_id, "fig1, fig3, fig4, fig5, fig6, fig7 or fig9")->required();

    auto* scaling = app.add_subcommand("scaling", "tune the scale on replicated Gaussians of growing dimension");
    add_shared(scaling, scaling_flags);
    std::string method;
    std::vector<std::size_t> dims{16, 64, 256};
    scaling->add_option("method", method, "rwm, hmc or lmc")->required();
    scaling->add_option("--dims", dims, "ascending dimensions");

    app.add_subcommand("selftest", "quick checks of the core numerics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hmc::kExitConfig;
    }

    auto load = [](const SharedFlags& f) {
        hmc::ExperimentConfig cfg;
        if (!f.config.empty()) hmc::apply_settings(cfg, hmc::read_config_file(f.config));
        if (f.seed) cfg.seed = f.seed;
        if (f.out) cfg.out = *f.out;
        return cfg;
    };

    try {
        if (*sample) {
            hmc::ExperimentConfig cfg = load(sample_flags);
            if (kernel) hmc::apply_settings(cfg, {{"kernel", *kernel}});
            if (target) cfg.target = *target;
            if (iters) cfg.iterations = *iters;
            if (eps_lo) cfg.plan.epsilon.first = *eps_lo;
            if (eps_hi) cfg.plan.epsilon.second = *eps_hi;
            if (steps_lo) cfg.plan.steps.first = *steps_lo;
            if (steps_hi) cfg.plan.steps.second = *steps_hi;
            if (window) cfg.plan.window = *window;
            if (alpha_temp) cfg.plan.alpha_temp = *alpha_temp;
            if (alpha_ref) cfg.plan.alpha_ref = *alpha_ref;
            return hmc::cmd_sample(cfg);
        }
        if (*figure) {
            const hmc::ExperimentConfig cfg = load(figure_flags);
            return hmc::cmd_figure(figure_id, cfg.seed, cfg.out);
        }
        if (*scaling) {
            const hmc::ExperimentConfig cfg = load(scaling_flags);
            return hmc::cmd_scaling(method, dims, cfg.seed, cfg.out);
        }
        return hmc::selftest(std::cout);
    } catch (const hmc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return hmc::kExitConfig;
    }
}
