#ifndef HMC_COMMANDS_HPP
#define HMC_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "hmc/analysis.hpp"
#include "hmc/config.hpp"
#include "hmc/experiments.hpp"
#include "hmc/samplers.hpp"
#include "hmc/targets.hpp"

namespace hmc {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitIo = 2, kExitSelftestFailed = 3 };

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& file) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw IoError("cannot write '" + (dir / file).string() + "'");
    return out;
}

inline void finish(std::ofstream& out, const std::string& what) {
    out.flush();
    if (!out) throw IoError("failed while writing " + what);
}

/// Run `body`, translating failures into exit codes.
inline int guarded(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
}

/// Per-task seed derived from a master seed and a counter (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Run a chain and write chain.csv (one row per iteration) and summary.csv
/// (statistic, coordinate, value; coordinate is -1 for chain-wide values).
inline int cmd_sample(const ExperimentConfig& cfg) {
    return detail::guarded([&] {
        validate(cfg);
        Target target = [&] {
            try {
                return make_figure_target(cfg.target);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }();
        const std::size_t d = target.dim();
        for (std::size_t i : cfg.monitor)
            if (i >= d) throw ConfigError("monitored coordinate " + std::to_string(i) + " is out of range");
        Vector q0 = Vector::Zero(static_cast<Eigen::Index>(d));
        if (!cfg.initial.empty()) {
            if (cfg.initial.size() != d) throw ConfigError("initial position has the wrong dimension");
            for (std::size_t i = 0; i < d; ++i) q0[static_cast<Eigen::Index>(i)] = cfg.initial[i];
        }
        std::vector<std::size_t> monitor = cfg.monitor;
        if (monitor.empty())
            for (std::size_t i = 0; i < d; ++i) monitor.push_back(i);

        const auto c = CanonicalDensity::unit_mass(std::move(target));
        const ChainRecord chain = run_chain(q0, c, cfg.plan, cfg.kernel, cfg.iterations, *cfg.seed);
        const auto burn = static_cast<std::size_t>(cfg.effective_burn_in());
        const DiagnosticsReport report = summarize(chain, burn, monitor);

        std::ofstream trace = detail::open_output(cfg.out, "chain.csv");
        trace << "iteration";
        for (std::size_t i : monitor) trace << ",q" << i;
        trace << ",delta_h,accepted,cumulative_evals\n" << std::setprecision(17);
        for (std::size_t t = 0; t < chain.size(); ++t) {
            trace << t;
            for (std::size_t i : monitor) trace << ',' << chain.positions[t][static_cast<Eigen::Index>(i)];
            trace << ',' << chain.delta_h[t] << ',' << (chain.accepted[t] ? 1 : 0) << ','
                  << chain.cumulative_evals[t] << '\n';
        }
        detail::finish(trace, "chain.csv");

        std::ofstream summary = detail::open_output(cfg.out, "summary.csv");
        summary << "statistic,coordinate,value\n" << std::setprecision(17);
        summary << "iterations,-1," << report.iterations << '\n';
        summary << "burn_in,-1," << report.burn_in << '\n';
        summary << "rejection_rate,-1," << report.rejection_rate << '\n';
        summary << "divergences,-1," << report.divergences << '\n';
        summary << "gradient_evals,-1," << report.gradient_evals << '\n';
        std::vector<double> kept(chain.delta_h.begin() + static_cast<long>(burn), chain.delta_h.end());
        try {
            const DeltaStats ds = empirical_delta_stats(kept);
            summary << "delta_h_mean,-1," << ds.mean << '\n';
            summary << "delta_h_variance,-1," << ds.variance << '\n';
            summary << "mean_exp_neg_delta_h,-1," << ds.mean_exp_neg << '\n';
        } catch (const std::invalid_argument&) {
        }
        for (std::size_t j = 0; j < monitor.size(); ++j) {
            const std::size_t i = monitor[j];
            summary << "mean," << i << ',' << report.means[i] << '\n';
            summary << "sd," << i << ',' << report.sds[i] << '\n';
            if (report.tau[j]) summary << "tau," << i << ',' << *report.tau[j] << '\n';
            if (report.ess[j]) summary << "ess," << i << ',' << *report.ess[j] << '\n';
        }
        detail::finish(summary, "summary.csv");
    });
}

/// Write <out>/<figure_id>.csv.
inline int cmd_figure(const std::string& figure_id, std::optional<std::uint64_t> seed, const std::string& out) {
    return detail::guarded([&] {
        if (!seed) throw ConfigError("a seed is required");
        bool known = false;
        for (const auto& id : figure_ids()) known = known || id == figure_id;
        if (!known) throw ConfigError("unknown figure '" + figure_id + "'");
        const Table table = figure_table(figure_id, *seed);
        std::ofstream file = detail::open_output(out, figure_id + ".csv");
        write_csv(file, table);
        detail::finish(file, figure_id + ".csv");
    });
}

/// Write <out>/scaling_<method>.csv with one tuned row per dimension.
inline int cmd_scaling(const std::string& method_name, const std::vector<std::size_t>& dims,
                       std::optional<std::uint64_t> seed, const std::string& out, const ScalingOptions& options = {}) {
    return detail::guarded([&] {
        if (!seed) throw ConfigError("a seed is required");
        ScalingMethod method;
        try {
            method = parse_scaling_method(method_name);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (dims.empty()) throw ConfigError("at least one dimension is required");
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (dims[i] == 0) throw ConfigError("dimensions must be positive");
            if (i > 0 && dims[i] <= dims[i - 1]) throw ConfigError("dimensions must be strictly ascending");
        }
        Table table{{"d", "scale", "acceptance", "cost"}, {}};
        for (std::size_t i = 0; i < dims.size(); ++i) {
            const ScalingRow row = tune_scaling(method, dims[i], detail::derive_seed(*seed, i), options);
            table.add({static_cast<double>(row.dim), row.scale, row.acceptance, row.cost});
        }
        std::ofstream file = detail::open_output(out, "scaling_" + method_name + ".csv");
        write_csv(file, table);
        detail::finish(file, "scaling csv");
    });
}

/// Quick deterministic checks of the core numerics; prints one line each.
inline int selftest(std::ostream& log) {
    struct Check {
        std::string name;
        std::function<bool()> ok;
    };
    const std::vector<Check> checks{
        {"fig3 energy error near 0.41",
         [] {
             const auto r = leapfrog_trajectory(fig3_start(), make_figure_target("gauss2d_95"), KineticSpec::unit(2),
                                                0.25, 25);
             return std::abs(r.delta_h - 0.41) < 0.02;
         }},
        {"leapfrog stable below eps = 2 sigma",
         [] {
             return stability_eigenvalues(1.0, 1.99).second == 1.0 && stability_eigenvalues(1.0, 2.01).second > 1.0;
         }},
        {"optimal acceptance 0.23 / 0.65 / 0.57",
         [] {
             return std::abs(optimal_acceptance(ScalingMethod::rwm).acceptance - 0.23) < 0.01 &&
                    std::abs(optimal_acceptance(ScalingMethod::hmc).acceptance - 0.65) < 0.01 &&
                    std::abs(optimal_acceptance(ScalingMethod::lmc).acceptance - 0.57) < 0.01;
         }},
        {"bundled gradients match finite differences",
         [] {
             Random rng(1);
             for (const auto& name : figure_target_names()) {
                 const Target t = make_figure_target(name);
                 for (int i = 0; i < 5; ++i) {
                     Vector q = rng.normal(t.dim());
                     if (name == "gauss100d") q = q.cwiseProduct(gauss100d_sds());
                     if (check_gradient(t, q, 1e-5) > 1e-5) return false;
                 }
             }
             return true;
         }},
    };
    bool all = true;
    for (const auto& c : checks) {
        bool ok = false;
        try {
            ok = c.ok();
        } catch (const std::exception& e) {
            log << "  error: " << e.what() << '\n';
        }
        log << (ok ? "PASS " : "FAIL ") << c.name << '\n';
        all = all && ok;
    }
    return all ? kExitOk : kExitSelftestFailed;
}

}  // namespace hmc

#endif  // HMC_COMMANDS_HPP
