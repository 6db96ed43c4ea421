// Acceptance checks: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hmc/hmc.hpp"

using namespace hmc;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

Vector v1(double x) { return Vector::Constant(1, x); }

bool within(double x, double centre, double tol) { return std::abs(x - centre) <= tol; }

double rejection_rate(const ChainRecord& chain) {
    long proposals = 0, acceptances = 0;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        proposals += chain.proposals[i];
        acceptances += chain.acceptances[i];
    }
    return 1.0 - static_cast<double>(acceptances) / static_cast<double>(proposals);
}

using Map = std::function<PhaseState(const PhaseState&)>;

Matrix jacobian(const Map& f, const PhaseState& s, double h) {
    const Eigen::Index d = s.q.size();
    Matrix jac(2 * d, 2 * d);
    auto flatten = [d](const PhaseState& x) {
        Vector v(2 * d);
        v << x.q, x.p;
        return v;
    };
    for (Eigen::Index j = 0; j < 2 * d; ++j) {
        PhaseState up = s, down = s;
        if (j < d) {
            up.q[j] += h;
            down.q[j] -= h;
        } else {
            up.p[j - d] += h;
            down.p[j - d] -= h;
        }
        jac.col(j) = (flatten(f(up)) - flatten(f(down))) / (2 * h);
    }
    return jac;
}

double reversal_error(const Map& f, const PhaseState& start) {
    PhaseState end = f(start);
    end.p = -end.p;
    PhaseState back = f(end);
    back.p = -back.p;
    return std::max((back.q - start.q).cwiseAbs().maxCoeff(), (back.p - start.p).cwiseAbs().maxCoeff());
}

/// Mean of f over the series and its standard error from 50 batch means.
std::pair<double, double> batch_mean(const std::vector<double>& xs, const std::function<double(double)>& f) {
    const std::size_t batches = 50, size = xs.size() / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = b * size; i < (b + 1) * size; ++i) means[b] += f(xs[i]);
        means[b] /= static_cast<double>(size);
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= batches;
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= batches - 1;
    return {mean, std::sqrt(var / batches)};
}

TrajectoryPlan plan_of(double eps_lo, double eps_hi, long l_lo, long l_hi) {
    TrajectoryPlan plan;
    plan.epsilon = {eps_lo, eps_hi};
    plan.steps = {l_lo, l_hi};
    return plan;
}

void fig3_energy(Outcome& o) {
    const auto r = leapfrog_trajectory(fig3_start(), make_figure_target("gauss2d_95"), KineticSpec::unit(2), 0.25, 25);
    const double a = std::exp(-r.delta_h);
    o.detail << "dH=" << r.delta_h << " exp(-dH)=" << a;
    o.require(within(r.delta_h, 0.41, 0.02), "dH");
    o.require(within(a, 0.66, 0.02), "acceptance");
}

void stability(Outcome& o) {
    const double below = stability_eigenvalues(1.0, 1.99).second;
    const double above = stability_eigenvalues(1.0, 2.01).second;
    const Target t = make_figure_target("gauss1d");
    const KineticSpec k = KineticSpec::unit(1);
    const PhaseState start(v1(0.0), v1(1.0));
    Trace trace;
    const auto stable = leapfrog_trajectory(start, t, k, 1.9, 1000, &trace);
    double worst = 0.0;
    for (const auto& row : trace) worst = std::max(worst, std::abs(row.hamiltonian - trace.front().hamiltonian));
    const auto unstable = leapfrog_trajectory(start, t, k, 2.2, 200);
    o.detail << "max|l|(1.99)=" << below << " max|l|(2.01)=" << above << " dH(1.9,1000)=" << stable.delta_h
             << " max|dH| along=" << worst << " divergent(2.2,200)=" << unstable.divergent;
    o.require(within(below, 1.0, 1e-12), "eps 1.99 eigenvalue");
    o.require(above > 1.0, "eps 2.01 eigenvalue");
    o.require(!stable.divergent && std::abs(stable.delta_h) < 1.0, "eps 1.9 energy error");
    o.require(unstable.divergent, "eps 2.2 divergence");
}

void optimal_rates(Outcome& o) {
    const double rwm = optimal_acceptance(ScalingMethod::rwm).acceptance;
    const double hmc = optimal_acceptance(ScalingMethod::hmc).acceptance;
    const double lmc = optimal_acceptance(ScalingMethod::lmc).acceptance;
    o.detail << "rwm=" << rwm << " hmc=" << hmc << " lmc=" << lmc;
    o.require(within(rwm, 0.23, 0.01), "rwm");
    o.require(within(hmc, 0.65, 0.01), "hmc");
    o.require(within(lmc, 0.57, 0.01), "lmc");
}

void comparison_2d(Outcome& o) {
    const auto runs = run_2d_comparison(10000, 20);
    const double h = rejection_rate(runs.hmc), r = rejection_rate(runs.rwm);
    o.detail << "hmc rejection=" << h << " rwm rejection=" << r;
    o.require(within(h, 0.09, 0.03), "hmc rejection");
    o.require(within(r, 0.37, 0.03), "rwm rejection");
}

void comparison_100d(Outcome& o) {
    const auto runs = run_100d_comparison(1000, 30);
    const double h = rejection_rate(runs.hmc), r = rejection_rate(runs.rwm);
    const double eh = rms_mean_error(runs.hmc), er = rms_mean_error(runs.rwm);
    o.detail << "hmc rejection=" << h << " rwm rejection=" << r << " evals hmc=" << runs.hmc.cumulative_evals.back()
             << " rwm=" << runs.rwm.cumulative_evals.back() << " rms error hmc=" << eh << " rwm=" << er
             << " ratio=" << er / eh;
    o.require(within(h, 0.13, 0.05), "hmc rejection");
    o.require(within(r, 0.75, 0.05), "rwm rejection");
    o.require(er / eh >= 3.0, "error ratio");
}

void tempering(Outcome& o) {
    const Target t = make_figure_target("mixture_fig9");
    auto one_way = [&t](const ChainRecord& chain) {
        long n = 0;
        for (std::size_t i = 1; i < chain.size(); ++i)
            if (t.mode_of()(chain.positions[i - 1]) == 0 && t.mode_of()(chain.positions[i]) == 1) ++n;
        return static_cast<double>(n) / static_cast<double>(chain.size());
    };
    const auto a = run_tempering(0.3, 200, 1.04, 2000, 40);
    const auto b = run_tempering(0.6, 20, 1.5, 2000, 41);
    const auto c = run_tempering(0.3, 200, 1.0, 2000, 42);
    const double ra = mode_switch_rate(a), rb = mode_switch_rate(b), rc = mode_switch_rate(c);
    o.detail << "switch rate (0.3,200,1.04)=" << ra << " (0.6,20,1.5)=" << rb << " plain=" << rc
             << " one-way (0.3,200,1.04)=" << one_way(a) << " (0.6,20,1.5)=" << one_way(b);
    o.require(within(ra, 0.11, 0.04), "alpha 1.04");
    o.require(within(rb, 0.06, 0.03), "alpha 1.5");
    o.require(rc < 0.005, "plain HMC");
}

void properties(Outcome& o) {
    Random rng(50);
    const Target mixture = make_figure_target("mixture_fig9");
    const KineticSpec k = KineticSpec::unit(2);
    const Target boxed =
        make_figure_target("gauss2d_95").with_constraints({Vector::Constant(2, -1.0), Vector::Constant(2, 1.5)});
    double rev = 0.0, det = 0.0, sym = 0.0;
    Matrix j_inv = Matrix::Zero(4, 4);
    j_inv.topRightCorner(2, 2) = -Matrix::Identity(2, 2);
    j_inv.bottomLeftCorner(2, 2) = Matrix::Identity(2, 2);
    for (int i = 0; i < 10; ++i) {
        const PhaseState s(rng.normal(2) * 0.5, rng.normal(2));
        const std::vector<Map> maps{
            [&](const PhaseState& x) { return leapfrog_trajectory(x, mixture, k, 0.2, 30).state; },
            [&](const PhaseState& x) { return tempered_trajectory(x, mixture, k, 0.2, 31, 1.1).state; },
        };
        for (const auto& f : maps) {
            rev = std::max(rev, reversal_error(f, s));
            det = std::max(det, std::abs(std::abs(jacobian(f, s, 1e-5).determinant()) - 1.0));
        }
        const PhaseState inside(s.q.cwiseMax(-0.9).cwiseMin(1.4), s.p);
        rev = std::max(rev, reversal_error([&](const PhaseState& x) { return leapfrog_trajectory(x, boxed, k, 0.2, 30).state; },
                                           inside));
        const Matrix b =
            jacobian([&](const PhaseState& x) { return leapfrog_trajectory(x, mixture, k, 0.25, 10).state; }, s, 1e-5);
        sym = std::max(sym, (b.transpose() * j_inv * b - j_inv).cwiseAbs().maxCoeff());
    }
    const Target g = make_figure_target("gauss1d");
    const KineticSpec k1 = KineticSpec::unit(1);
    auto error = [&](auto step, double eps) {
        PhaseState s(v1(0), v1(1));
        const int n = static_cast<int>(std::lround(1.0 / eps));
        for (int i = 0; i < n; ++i) s = step(s, g, k1, eps).state;
        return std::hypot(s.q[0] - std::sin(1.0), s.p[0] - std::cos(1.0));
    };
    const double lf = error(leapfrog_step, 0.02) / error(leapfrog_step, 0.01);
    const double eu = error(euler_step, 0.02) / error(euler_step, 0.01);
    o.detail << "reversal=" << rev << " |det|-1=" << det << " symplectic=" << sym << " leapfrog ratio=" << lf
             << " euler ratio=" << eu;
    o.require(rev < 1e-10, "reversibility");
    o.require(det < 1e-6, "volume");
    o.require(sym < 1e-5, "symplecticness");
    o.require(within(lf, 4.0, 0.8), "leapfrog order");
    o.require(within(eu, 2.0, 0.4), "euler order");
}

void stationarity(Outcome& o) {
    const auto c = CanonicalDensity::unit_mass(make_figure_target("gauss1d"));
    struct Case {
        std::string label;
        Kernel kernel;
        TrajectoryPlan plan;
    };
    std::vector<Case> cases;
    const TrajectoryPlan base = plan_of(0.4, 0.6, 5, 15);
    cases.push_back({"hmc", Kernel::hmc, base});
    cases.push_back({"lmc", Kernel::lmc, plan_of(0.8, 1.0, 1, 1)});
    cases.push_back({"rwm", Kernel::rwm, plan_of(2.0, 2.6, 1, 1)});
    for (double a : {0.0, 0.5, 0.9}) {
        TrajectoryPlan p = plan_of(0.4, 0.6, 2, 4);
        p.alpha_ref = a;
        std::ostringstream name;
        name << "ghmc(" << a << ")";
        cases.push_back({name.str(), Kernel::ghmc, p});
    }
    for (long w : {2L, 5L}) {
        TrajectoryPlan p = plan_of(1.0, 1.6, 5, 15);
        p.window = w;
        cases.push_back({"windowed(" + std::to_string(w) + ")", Kernel::windowed, p});
    }
    {
        TrajectoryPlan p = base;
        p.alpha_temp = 1.02;
        cases.push_back({"tempered", Kernel::tempered, p});
    }
    {
        TrajectoryPlan p = plan_of(1.0, 1.6, 5, 15);
        p.shortcut = Shortcut{Shortcut::Mode::terminate, 0.3};
        cases.push_back({"terminate", Kernel::hmc, p});
    }
    {
        TrajectoryPlan p = plan_of(0.4, 1.2, 12, 12);
        Shortcut s;
        s.mode = Shortcut::Mode::reverse;
        s.group_size = 4;
        s.upper = 0.2;
        p.shortcut = s;
        cases.push_back({"reverse", Kernel::hmc, p});
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto chain = run_chain(v1(0.0), c, cases[i].plan, cases[i].kernel, 50000, 60 + i);
        std::vector<double> xs;
        for (const auto& q : chain.positions) xs.push_back(q[0]);
        const auto [m1, se1] = batch_mean(xs, [](double x) { return x; });
        const auto [m2, se2] = batch_mean(xs, [](double x) { return x * x; });
        const auto [m4, se4] = batch_mean(xs, [](double x) { return x * x * x * x; });
        const double z = std::max({std::abs(m1) / se1, std::abs(m2 - 1.0) / se2, std::abs(m4 - 3.0) / se4});
        worst = std::max(worst, z);
        o.require(z < 5.0, cases[i].label);
    }
    o.detail << cases.size() << " kernels, largest z=" << worst;
}

void langevin(Outcome& o) {
    Random rng(70);
    const Target t = make_figure_target("mixture_fig9");
    Vector m(2);
    m << 0.7, 1.9;
    const KineticSpec k(m);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Vector q = rng.normal(2), p = k.sample(rng);
        const double eps = rng.uniform(0.05, 0.8);
        const Vector q_star = leapfrog_step({q, p}, t, k, eps).state.q;
        worst = std::max(worst, std::abs(langevin_acceptance_phase_space(q, p, eps, t, k) -
                                         langevin_acceptance_proposal_density(q, q_star, eps, t, k)));
    }
    o.detail << "largest difference=" << worst;
    o.require(worst <= 1e-12, "agreement");
}

void windowed(Outcome& o) {
    const auto c = CanonicalDensity::unit_mass(make_figure_target("gauss2d_98"));
    const TrajectoryPlan plan = plan_of(0.15, 0.2, 10, 20);
    const auto a = run_chain(Vector::Zero(2), c, plan, Kernel::windowed, 500, 80);
    const auto b = run_chain(Vector::Zero(2), c, plan, Kernel::hmc, 500, 80);
    const bool same = a.positions == b.positions && a.accepted == b.accepted;

    Random rng(81);
    const int trials = 10000;
    int second = 0;
    for (int i = 0; i < trials; ++i) {
        detail::WindowReservoir r;
        r.offer({v1(1), v1(0)}, std::log(1.0), rng);
        r.offer({v1(2), v1(0)}, std::log(3.0), rng);
        second += r.saved->q[0] == 2 ? 1 : 0;
    }
    const double freq = static_cast<double>(second) / trials;

    const auto tuned = tune_windowed_100d(82);
    o.detail << "W=1 identical=" << same << " reservoir=" << freq << " (expected 0.75) tuned eps=" << tuned.epsilon
             << " acceptance=" << tuned.acceptance;
    o.require(same, "W=1");
    o.require(within(freq, 0.75, 0.02), "reservoir");
    o.require(within(tuned.acceptance, 0.85, 0.05), "tuned acceptance");
}

void scaling(Outcome& o) {
    const std::vector<std::size_t> dims{16, 64, 256};
    for (const ScalingMethod method : {ScalingMethod::hmc, ScalingMethod::rwm}) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < dims.size(); ++i) {
            const ScalingRow row = tune_scaling(method, dims[i], detail::derive_seed(90, i));
            x.push_back(static_cast<double>(row.dim));
            y.push_back(row.scale);
        }
        const double slope = log_log_slope(x, y);
        o.detail << to_string(method) << " slope=" << slope << " ";
        if (method == ScalingMethod::hmc)
            o.require(within(slope, -0.25, 0.08), "hmc slope");
        else
            o.require(within(slope, -0.5, 0.1), "rwm slope");
    }
}

struct Criterion {
    std::string name;
    double budget_seconds;
    std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
    std::cout << std::setprecision(4);
    const std::vector<Criterion> criteria{
        {"1 fig3 trajectory energy error", 1, fig3_energy},
        {"2 leapfrog stability threshold", 1, stability},
        {"3 optimal acceptance rates", 1, optimal_rates},
        {"4 2D correlated Gaussian rejection rates", 10, comparison_2d},
        {"5 100-D Gaussian comparison", 120, comparison_100d},
        {"6 tempered trajectories switch modes", 60, tempering},
        {"7 integrator properties", 10, properties},
        {"8 sampler stationarity", 60, stationarity},
        {"9 Langevin acceptance forms agree", 1, langevin},
        {"10 windowed HMC", 120, windowed},
        {"11 scaling slopes", 300, scaling},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        o.detail << std::setprecision(4);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [error: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(secs < c.budget_seconds, "runtime");
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail.str() << " (" << secs << " s)"
                  << std::endl;
    }
    std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
