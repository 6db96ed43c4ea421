#ifndef HMC_EXPERIMENTS_HPP
#define HMC_EXPERIMENTS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmc/analysis.hpp"
#include "hmc/integrators.hpp"
#include "hmc/samplers.hpp"
#include "hmc/targets.hpp"

namespace hmc {

/// A numeric table with a header, written as CSV.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) {
        if (row.size() != header.size()) throw std::logic_error("row width does not match header");
        rows.push_back(std::move(row));
    }
};

inline void write_csv(std::ostream& out, const Table& t) {
    for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
    out << '\n' << std::setprecision(17);
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

/// Exact draw from a diagonal Gaussian with zero mean.
inline Vector draw_diagonal(const Vector& sds, Random& rng) { return sds.cwiseProduct(rng.normal(sds.size())); }

// Figure setups.
inline PhaseState fig3_start() { return {vec({-1.50, -1.55}), vec({-1.0, 1.0})}; }
inline PhaseState fig9_top_start() { return {vec({-0.4, -0.9}), vec({0.7, -0.9})}; }
inline PhaseState fig9_bottom_start() { return {vec({0.1, 1.0}), vec({0.5, 0.8})}; }

/// Euler, modified Euler and leapfrog (eps 0.3) and leapfrog (eps 1.2) on
/// H = q^2/2 + p^2/2 from (0, 1), 20 steps each, beside the exact solution.
inline Table fig1_table() {
    const Target t = make_figure_target("gauss1d");
    const KineticSpec k = KineticSpec::unit(1);
    Table table{{"step", "exact_q", "exact_p", "euler_q", "euler_p", "modified_euler_q", "modified_euler_p",
                 "leapfrog_q", "leapfrog_p", "leapfrog_large_q", "leapfrog_large_p"},
                {}};
    const PhaseState start(vec({0.0}), vec({1.0}));
    PhaseState e = start, m = start, l = start, big = start;
    for (int i = 0; i <= 20; ++i) {
        const double time = 0.3 * i;
        table.add({static_cast<double>(i), std::sin(time), std::cos(time), e.q[0], e.p[0], m.q[0], m.p[0], l.q[0],
                   l.p[0], big.q[0], big.p[0]});
        e = euler_step(e, t, k, 0.3).state;
        m = modified_euler_step(m, t, k, 0.3).state;
        l = leapfrog_step(l, t, k, 0.3).state;
        big = leapfrog_step(big, t, k, 1.2).state;
    }
    return table;
}

/// 25 leapfrog steps with eps 0.25 on the rho = 0.95 Gaussian; steps 0..25.
inline Table fig3_table() {
    const Target t = make_figure_target("gauss2d_95");
    Trace trace;
    leapfrog_trajectory(fig3_start(), t, KineticSpec::unit(2), 0.25, 25, &trace);
    Table table{{"step", "q1", "q2", "p1", "p2", "H"}, {}};
    for (const auto& r : trace)
        table.add({static_cast<double>(r.step), r.state.q[0], r.state.q[1], r.state.p[0], r.state.p[1], r.hamiltonian});
    return table;
}

struct ComparisonRuns {
    ChainRecord hmc;
    ChainRecord rwm;
};

/// HMC (eps 0.18, L 20) and random-walk Metropolis (sd 0.18, 20 updates per
/// iteration) on the rho = 0.98 Gaussian, both from the fig 3 start position.
inline ComparisonRuns run_2d_comparison(long iterations, std::uint64_t seed) {
    const auto c = CanonicalDensity::unit_mass(make_figure_target("gauss2d_98"));
    TrajectoryPlan hmc_plan;
    hmc_plan.epsilon = {0.18, 0.18};
    hmc_plan.steps = {20, 20};
    TrajectoryPlan rwm_plan;
    rwm_plan.epsilon = {0.18, 0.18};
    rwm_plan.updates_per_iteration = 20;
    const Vector start = fig3_start().q;
    return {run_chain(start, c, hmc_plan, Kernel::hmc, iterations, seed),
            run_chain(start, c, rwm_plan, Kernel::rwm, iterations, seed + 1)};
}

inline Table fig4_table(std::uint64_t seed) {
    auto runs = run_2d_comparison(20, seed);
    Table table{{"iteration", "rwm_q1", "rwm_q2", "hmc_q1", "hmc_q2"}, {}};
    const Vector s = fig3_start().q;
    table.add({0.0, s[0], s[1], s[0], s[1]});
    for (std::size_t i = 0; i < runs.hmc.size(); ++i)
        table.add({static_cast<double>(i + 1), runs.rwm.positions[i][0], runs.rwm.positions[i][1],
                   runs.hmc.positions[i][0], runs.hmc.positions[i][1]});
    return table;
}

inline Table fig5_table(std::uint64_t seed) {
    auto runs = run_2d_comparison(200, seed);
    Table table{{"iteration", "rwm_q1", "hmc_q1"}, {}};
    for (std::size_t i = 0; i < runs.hmc.size(); ++i)
        table.add({static_cast<double>(i + 1), runs.rwm.positions[i][0], runs.hmc.positions[i][0]});
    return table;
}

/// HMC with L = 150, eps ~ U(0.0104, 0.0156), against random-walk Metropolis
/// with 150 updates per iteration and sd ~ U(0.0176, 0.0264), on the 100-D
/// diagonal Gaussian. Both start from the same exact draw.
inline ComparisonRuns run_100d_comparison(long iterations, std::uint64_t seed) {
    const auto c = CanonicalDensity::unit_mass(make_figure_target("gauss100d"));
    Random init(seed);
    const Vector start = draw_diagonal(gauss100d_sds(), init);
    TrajectoryPlan hmc_plan;
    hmc_plan.epsilon = {0.0104, 0.0156};
    hmc_plan.steps = {150, 150};
    TrajectoryPlan rwm_plan;
    rwm_plan.epsilon = {0.0176, 0.0264};
    rwm_plan.updates_per_iteration = 150;
    return {run_chain(start, c, hmc_plan, Kernel::hmc, iterations, seed + 1),
            run_chain(start, c, rwm_plan, Kernel::rwm, iterations, seed + 2)};
}

inline Table fig6_table(const ComparisonRuns& runs) {
    Table table{{"iteration", "rwm_q100", "hmc_q100"}, {}};
    for (std::size_t i = 0; i < runs.hmc.size(); ++i)
        table.add({static_cast<double>(i + 1), runs.rwm.positions[i][99], runs.hmc.positions[i][99]});
    return table;
}

inline Table fig7_table(const ComparisonRuns& runs) {
    const auto h = summarize(runs.hmc, 0, {99});
    const auto r = summarize(runs.rwm, 0, {99});
    const Vector sds = gauss100d_sds();
    Table table{{"true_sd", "rwm_mean", "hmc_mean", "rwm_sd", "hmc_sd"}, {}};
    for (std::size_t i = 0; i < 100; ++i)
        table.add({sds[static_cast<Eigen::Index>(i)], r.means[i], h.means[i], r.sds[i], h.sds[i]});
    return table;
}

/// Root mean square of the per-coordinate mean estimates (true means are zero).
inline double rms_mean_error(const ChainRecord& chain) {
    const auto s = summarize(chain, 0, {0});
    double sum = 0.0;
    for (double m : s.means) sum += m * m;
    return std::sqrt(sum / static_cast<double>(s.means.size()));
}

/// The two tempered trajectories on the two-Gaussian mixture (eps 0.3, L 200,
/// alpha 1.04); trajectory 0 crosses modes, trajectory 1 does not.
inline Table fig9_table() {
    const Target t = make_figure_target("mixture_fig9");
    Table table{{"trajectory", "step", "H", "q1", "q2"}, {}};
    int index = 0;
    for (const PhaseState& start : {fig9_top_start(), fig9_bottom_start()}) {
        Trace trace;
        tempered_trajectory(start, t, KineticSpec::unit(2), 0.3, 200, 1.04, &trace);
        for (const auto& r : trace)
            table.add({static_cast<double>(index), static_cast<double>(r.step), r.hamiltonian, r.state.q[0],
                       r.state.q[1]});
        ++index;
    }
    return table;
}

inline const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig1", "fig3", "fig4", "fig5", "fig6", "fig7", "fig9"};
    return ids;
}

inline Table figure_table(const std::string& id, std::uint64_t seed) {
    if (id == "fig1") return fig1_table();
    if (id == "fig3") return fig3_table();
    if (id == "fig4") return fig4_table(seed);
    if (id == "fig5") return fig5_table(seed);
    if (id == "fig6") return fig6_table(run_100d_comparison(1000, seed));
    if (id == "fig7") return fig7_table(run_100d_comparison(1000, seed));
    if (id == "fig9") return fig9_table();
    throw std::invalid_argument("unknown figure '" + id + "'");
}

/// Fraction of iterations that are accepted and end in the other mode.
inline double mode_switch_rate(const ChainRecord& chain) {
    long switches = 0;
    for (const auto& m : chain.moved_mode)
        if (m.value_or(false)) ++switches;
    return static_cast<double>(switches) / static_cast<double>(chain.size());
}

inline ChainRecord run_tempering(double eps, long steps, double alpha, long iterations, std::uint64_t seed) {
    const auto c = CanonicalDensity::unit_mass(make_figure_target("mixture_fig9"));
    TrajectoryPlan plan;
    plan.epsilon = {eps, eps};
    plan.steps = {steps, steps};
    plan.alpha_temp = alpha;
    return run_chain(Vector::Zero(2), c, plan, alpha == 1.0 ? Kernel::hmc : Kernel::tempered, iterations, seed);
}

struct WindowedTuning {
    double epsilon = 0.0;  // centre of the jittered stepsize range
    double acceptance = 0.0;
    std::vector<std::pair<double, double>> grid;  // (epsilon, mean acceptance)
};

inline TrajectoryPlan windowed_100d_plan(double eps) {
    TrajectoryPlan plan;
    plan.epsilon = {0.8 * eps, 1.2 * eps};
    plan.steps = {150, 150};
    plan.window = 10;
    return plan;
}

/// Windowed HMC (W 10, L 150, stepsize jittered by 20%) on the 100-D Gaussian.
/// The stepsize centre is chosen on a grid to maximize acceptance times
/// stepsize, the distance covered per gradient evaluation; the acceptance
/// rate at the chosen stepsize is then measured on a fresh, longer run.
inline WindowedTuning tune_windowed_100d(std::uint64_t seed, long tuning_iterations = 400, long final_iterations = 1000) {
    const auto c = CanonicalDensity::unit_mass(make_figure_target("gauss100d"));
    Random init(seed);
    const Vector start = draw_diagonal(gauss100d_sds(), init);
    WindowedTuning out;
    double best = -1.0;
    for (int i = 0; i <= 24; ++i) {
        const double eps = 0.014 + 0.00025 * i;
        const ChainRecord chain = run_chain(start, c, windowed_100d_plan(eps), Kernel::windowed, tuning_iterations, seed + 1);
        const double a = 1.0 - summarize(chain, 0, {0}).rejection_rate;
        out.grid.emplace_back(eps, a);
        if (a * eps > best) {
            best = a * eps;
            out.epsilon = eps;
        }
    }
    const ChainRecord chain =
        run_chain(start, c, windowed_100d_plan(out.epsilon), Kernel::windowed, final_iterations, seed + 2);
    out.acceptance = 1.0 - summarize(chain, 0, {0}).rejection_rate;
    return out;
}

struct ScalingRow {
    std::size_t dim = 0;
    double scale = 0.0;  // stepsize, or proposal sd for random-walk Metropolis
    double acceptance = 0.0;
    double cost = 0.0;  // evaluations per iteration times autocorrelation time
};

struct ScalingOptions {
    long tuning_iterations = 3000;
    long cost_iterations = 2000;
    int bisection_rounds = 25;
    // HMC trajectories last about this long: L = round(time / eps).
    double trajectory_time = 1.5;
    // Relative jitter of the scale within each trajectory plan.
    double jitter = 0.1;
};

namespace detail {

inline TrajectoryPlan scaling_plan(ScalingMethod method, double scale, const ScalingOptions& o) {
    TrajectoryPlan plan;
    plan.epsilon = {scale * (1.0 - o.jitter), scale * (1.0 + o.jitter)};
    const long steps = method == ScalingMethod::hmc
                           ? std::max(1L, static_cast<long>(std::lround(o.trajectory_time / scale)))
                           : 1L;
    plan.steps = {steps, steps};
    return plan;
}

inline Kernel scaling_kernel(ScalingMethod method) {
    return method == ScalingMethod::rwm ? Kernel::rwm : method == ScalingMethod::lmc ? Kernel::lmc : Kernel::hmc;
}

}  // namespace detail

/// Mean Metropolis acceptance probability min(1, exp(-dH)) along a chain
/// started from an exact draw of the replicated standard normal.
inline double mean_acceptance(ScalingMethod method, std::size_t d, double scale, long iterations,
                              std::uint64_t seed, const ScalingOptions& o = {}) {
    const auto c = CanonicalDensity::unit_mass(replicated_gaussian(d));
    Random init(seed);
    const Vector start = init.normal(d);
    const ChainRecord chain =
        run_chain(start, c, detail::scaling_plan(method, scale, o), detail::scaling_kernel(method), iterations, seed + 1);
    double sum = 0.0;
    for (double dh : chain.delta_h) sum += std::isfinite(dh) ? std::min(1.0, std::exp(-dh)) : 0.0;
    return sum / static_cast<double>(chain.size());
}

/// Tune the scale so the mean acceptance matches the method's optimum, then
/// measure the cost per effectively independent draw of the first coordinate.
/// Tuning bisects on log scale with a fixed seed, so every candidate sees the
/// same random numbers.
inline ScalingRow tune_scaling(ScalingMethod method, std::size_t d, std::uint64_t seed, const ScalingOptions& o = {}) {
    const double target = optimal_acceptance(method).acceptance;
    double lo = 1e-3, hi = method == ScalingMethod::rwm ? 5.0 : 2.0;
    for (int i = 0; i < o.bisection_rounds; ++i) {
        const double mid = std::sqrt(lo * hi);
        if (mean_acceptance(method, d, mid, o.tuning_iterations, seed, o) > target)
            lo = mid;
        else
            hi = mid;
    }
    ScalingRow row;
    row.dim = d;
    row.scale = std::sqrt(lo * hi);
    row.acceptance = mean_acceptance(method, d, row.scale, o.tuning_iterations, seed, o);

    const auto c = CanonicalDensity::unit_mass(replicated_gaussian(d));
    Random init(seed + 2);
    const ChainRecord chain = run_chain(init.normal(d), c, detail::scaling_plan(method, row.scale, o),
                                        detail::scaling_kernel(method), o.cost_iterations, seed + 3);
    std::vector<double> series;
    for (const auto& q : chain.positions) series.push_back(q[0]);
    const double per_iteration =
        static_cast<double>(chain.cumulative_evals.back()) / static_cast<double>(chain.size());
    row.cost = per_iteration * integrated_autocorrelation(series);
    return row;
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

}  // namespace hmc

#endif  // HMC_EXPERIMENTS_HPP
