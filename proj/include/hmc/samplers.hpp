#ifndef HMC_SAMPLERS_HPP
#define HMC_SAMPLERS_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hmc/integrators.hpp"
#include "hmc/model.hpp"

namespace hmc {

struct Shortcut {
    enum class Mode { terminate, reverse };

    Mode mode = Mode::terminate;
    // terminate: largest allowed |H change| over a single step.
    double threshold = kInfinity;
    // reverse: group length k and the accepted band for the std-dev of H over k+1 states.
    long group_size = 1;
    double lower = 0.0;
    double upper = kInfinity;
};

/// Tuning of one family of trajectories. Ranges are closed; when lo == hi the
/// value is fixed and no random number is consumed for it.
struct TrajectoryPlan {
    std::pair<double, double> epsilon{0.1, 0.1};
    std::pair<long, long> steps{10, 10};
    long window = 1;
    double alpha_temp = 1.0;
    double alpha_ref = 0.0;
    std::optional<Shortcut> shortcut;
    std::vector<double> window_weights;
    std::optional<SplitScheme> split;
    // Random-walk Metropolis: proposals per iteration, each with sd drawn from `epsilon`.
    long updates_per_iteration = 1;

    void validate() const {
        if (!(epsilon.first > 0.0) || !(epsilon.first <= epsilon.second) || !std::isfinite(epsilon.second))
            throw std::invalid_argument("stepsize range must satisfy 0 < lo <= hi");
        if (steps.first < 1 || steps.first > steps.second)
            throw std::invalid_argument("step-count range must satisfy 1 <= lo <= hi");
        if (window < 1) throw std::invalid_argument("window must be at least 1");
        if (!(alpha_temp > 0.0) || !std::isfinite(alpha_temp))
            throw std::invalid_argument("tempering factor must be positive");
        if (!(alpha_ref >= -1.0 && alpha_ref <= 1.0))
            throw std::invalid_argument("refresh coefficient must lie in [-1, 1]");
        if (!window_weights.empty()) {
            if (static_cast<long>(window_weights.size()) != window)
                throw std::invalid_argument("window weights must have one entry per window state");
            for (double w : window_weights)
                if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("window weights must be positive");
        }
        if (updates_per_iteration < 1) throw std::invalid_argument("updates per iteration must be at least 1");
        if (shortcut && shortcut->mode == Shortcut::Mode::reverse) {
            if (shortcut->group_size < 1) throw std::invalid_argument("short-cut group size must be at least 1");
            if (!(shortcut->lower <= shortcut->upper)) throw std::invalid_argument("short-cut band is empty");
        }
    }
};

struct IterationOutcome {
    PhaseState state;
    bool accepted = false;
    double delta_h = 0.0;
    long gradient_evals = 0;
    bool divergent = false;
    std::optional<bool> moved_mode;
    // Random-walk Metropolis may make several proposals per iteration.
    long proposals = 1;
    long acceptances = 0;
};

namespace detail {

inline double draw_epsilon(const TrajectoryPlan& plan, Random& rng) {
    auto [lo, hi] = plan.epsilon;
    return hi > lo ? rng.uniform(lo, hi) : lo;
}

inline long draw_steps(const TrajectoryPlan& plan, Random& rng) {
    auto [lo, hi] = plan.steps;
    return hi > lo ? rng.uniform_int(lo, hi) : lo;
}

inline bool metropolis(double delta_h, bool divergent, Random& rng) {
    const double u = rng.uniform();
    return !divergent && u < std::exp(-delta_h);
}

inline std::optional<bool> mode_change(const Target& target, const Vector& before, const Vector& after) {
    if (!target.mode_of()) return std::nullopt;
    return target.mode_of()(before) != target.mode_of()(after);
}

inline double log_add(double a, double b) {
    if (a == -kInfinity) return b;
    if (b == -kInfinity) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace detail

/// Short-cut trajectory of L steps.
///
/// Terminate mode abandons the trajectory as soon as one step changes H by more
/// than the threshold. Reverse mode works in groups of k steps (L must be a
/// multiple of k): a group whose k+1 values of H have a standard deviation
/// outside [lower, upper] is not taken and the momentum is negated instead.
/// States already computed are replayed from a cache, so after two reversals
/// the remaining groups cost no gradient evaluations.
inline TrajectoryResult shortcut_trajectory(const PhaseState& start, const Target& target, const KineticSpec& kinetic,
                                            double eps, long steps, const Shortcut& shortcut) {
    detail::require_steps(steps);
    const double h0 = detail::start_energy(start, target, kinetic);

    if (shortcut.mode == Shortcut::Mode::terminate) {
        LeapfrogStepper stepper(target, kinetic, eps);
        stepper.reset(start);
        double h_prev = h0;
        for (long i = 0; i < steps; ++i) {
            const bool finite = stepper.step();
            const double h = energy(stepper.state(), target, kinetic);
            if (!finite || !std::isfinite(h) || !(std::abs(h - h_prev) <= shortcut.threshold)) {
                TrajectoryResult out{stepper.state(), kInfinity, stepper.gradient_evals()};
                out.terminated = true;
                out.divergent = !finite || !std::isfinite(h);
                return out;
            }
            h_prev = h;
        }
        TrajectoryResult out{stepper.state(), energy(stepper.state(), target, kinetic) - h0, stepper.gradient_evals()};
        out.divergent = is_divergent(out.delta_h);
        return out;
    }

    const long k = shortcut.group_size;
    if (k < 1 || steps % k != 0)
        throw std::invalid_argument("reverse short-cut needs a step count that is a multiple of the group size");

    // Lattice position -> state, with momentum stored in forward orientation.
    struct Cached {
        PhaseState state;
        Vector gradient;
        double h;
    };
    std::map<long, Cached> cache;
    std::map<long, bool> group_ok;  // keyed by the lower end of the group
    long evals = 1;
    cache.emplace(0, Cached{start, target.dynamics_gradient(start.q), h0});

    long pos = 0;
    int dir = 1;
    bool finite = true;
    for (long g = 0; g < steps / k && finite; ++g) {
        const long lo = dir > 0 ? pos : pos - k;
        auto known = group_ok.find(lo);
        bool ok;
        if (known != group_ok.end()) {
            ok = known->second;
        } else {
            LeapfrogStepper stepper(target, kinetic, dir * eps);
            const Cached& from = cache.at(pos);
            stepper.reset(from.state, from.gradient);
            std::vector<double> hs{from.h};
            for (long i = 1; i <= k; ++i) {
                finite = stepper.step();
                const double h = energy(stepper.state(), target, kinetic);
                hs.push_back(h);
                cache[pos + dir * i] = Cached{stepper.state(), stepper.gradient(), h};
                if (!finite) break;
            }
            evals += stepper.gradient_evals();
            if (!finite) {
                pos += dir * static_cast<long>(hs.size() - 1);
                break;
            }
            double mean = 0.0;
            for (double h : hs) mean += h;
            mean /= static_cast<double>(hs.size());
            double var = 0.0;
            for (double h : hs) var += (h - mean) * (h - mean);
            const double sd = std::sqrt(var / static_cast<double>(hs.size()));
            ok = sd >= shortcut.lower && sd <= shortcut.upper;  // NaN fails
            group_ok[lo] = ok;
        }
        if (ok)
            pos += dir * k;
        else
            dir = -dir;
    }

    const Cached& end = cache.at(pos);
    PhaseState state = end.state;
    if (dir < 0) state.p = -state.p;
    TrajectoryResult out{state, finite ? end.h - h0 : kInfinity, evals};
    out.divergent = is_divergent(out.delta_h);
    return out;
}

namespace detail {

inline TrajectoryResult run_plan_trajectory(const PhaseState& start, const CanonicalDensity& c,
                                            const TrajectoryPlan& plan, double eps, long steps, Random& rng) {
    if (plan.split) {
        SplitResult r = split_trajectory(start, c.target, c.kinetic, eps, steps, *plan.split, rng);
        TrajectoryResult out{r.state, r.delta_h, r.expensive_gradient_evals};
        out.divergent = r.divergent;
        return out;
    }
    if (plan.shortcut) return shortcut_trajectory(start, c.target, c.kinetic, eps, steps, *plan.shortcut);
    if (plan.alpha_temp != 1.0) return tempered_trajectory(start, c.target, c.kinetic, eps, steps, plan.alpha_temp);
    return leapfrog_trajectory(start, c.target, c.kinetic, eps, steps);
}

/// Propose from (q, p) and accept or reject. Returns (q*, -p*) on acceptance
/// and the input state on rejection.
inline IterationOutcome propose_and_accept(const PhaseState& start, const CanonicalDensity& c,
                                           const TrajectoryPlan& plan, Random& rng) {
    const double eps = draw_epsilon(plan, rng);
    const long steps = draw_steps(plan, rng);
    TrajectoryResult r = run_plan_trajectory(start, c, plan, eps, steps, rng);
    IterationOutcome out;
    out.delta_h = r.delta_h;
    out.gradient_evals = r.gradient_evals;
    out.divergent = r.divergent;
    out.accepted = metropolis(r.delta_h, r.divergent || r.terminated, rng);
    out.acceptances = out.accepted ? 1 : 0;
    if (out.accepted) {
        out.state = PhaseState(std::move(r.state.q), -r.state.p);
    } else {
        out.state = start;
    }
    out.moved_mode = mode_change(c.target, start.q, out.state.q);
    return out;
}

}  // namespace detail

/// One iteration of standard HMC: full momentum refresh, a trajectory from the
/// plan (leapfrog, split, short-cut or tempered), and a Metropolis test on the
/// exact Hamiltonian.
inline IterationOutcome hmc_iteration(const PhaseState& state, const CanonicalDensity& c, const TrajectoryPlan& plan,
                                      Random& rng) {
    plan.validate();
    PhaseState start(state.q, c.kinetic.sample(rng));
    return detail::propose_and_accept(start, c, plan, rng);
}

inline IterationOutcome tempered_hmc_iteration(const PhaseState& state, const CanonicalDensity& c,
                                               const TrajectoryPlan& plan, Random& rng) {
    TrajectoryPlan tempered = plan;
    tempered.shortcut.reset();
    tempered.split.reset();
    return hmc_iteration(state, c, tempered, rng);
}

/// Random-walk Metropolis with isotropic Gaussian proposals. Each of the
/// plan's updates_per_iteration proposals draws its sd from `sd_range`.
inline IterationOutcome rwm_iteration(const Vector& q, const Target& target, std::pair<double, double> sd_range,
                                      Random& rng, long updates = 1) {
    if (!(sd_range.first > 0.0) || !(sd_range.first <= sd_range.second))
        throw std::invalid_argument("proposal sd range must satisfy 0 < lo <= hi");
    if (updates < 1) throw std::invalid_argument("updates per iteration must be at least 1");
    Vector current = q;
    double u_current = target.potential(current);
    if (!std::isfinite(u_current)) throw std::domain_error("random-walk start has infinite potential");
    IterationOutcome out;
    out.proposals = updates;
    for (long i = 0; i < updates; ++i) {
        const double sd = sd_range.second > sd_range.first ? rng.uniform(sd_range.first, sd_range.second)
                                                           : sd_range.first;
        Vector proposal = current + sd * rng.normal(target.dim());
        const double u_new = target.potential(proposal);
        const double delta = u_new - u_current;
        const double u = rng.uniform();
        out.delta_h = delta;
        if (std::isfinite(u_new) && u < std::exp(-delta)) {
            current = std::move(proposal);
            u_current = u_new;
            ++out.acceptances;
        }
    }
    out.accepted = out.acceptances > 0;
    out.moved_mode = detail::mode_change(target, q, current);
    out.state = PhaseState(current, Vector::Zero(current.size()));
    return out;
}

/// Acceptance probability of a one-step proposal written in phase space.
inline double langevin_acceptance_phase_space(const Vector& q, const Vector& p, double eps, const Target& target,
                                              const KineticSpec& kinetic) {
    StepReport step = leapfrog_step(PhaseState(q, p), target, kinetic, eps);
    const double dh = target.potential(step.state.q) - target.potential(q) + kinetic.energy(step.state.p) -
                      kinetic.energy(p);
    return std::min(1.0, std::exp(-dh));
}

/// The same acceptance probability written as Metropolis-Hastings with the
/// Langevin proposal density q* ~ N(q - eps^2/(2m) dU/dq, eps^2/m).
inline double langevin_acceptance_proposal_density(const Vector& q, const Vector& q_star, double eps,
                                                   const Target& target, const KineticSpec& kinetic) {
    const Vector& m = kinetic.masses();
    const Vector g = target.gradient(q);
    const Vector g_star = target.gradient(q_star);
    const double e2 = eps * eps;
    double log_ratio = -target.potential(q_star) + target.potential(q);
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        const double back = q[i] - q_star[i] + e2 / (2.0 * m[i]) * g_star[i];
        const double forward = q_star[i] - q[i] + e2 / (2.0 * m[i]) * g[i];
        log_ratio += -m[i] * back * back / (2.0 * e2) + m[i] * forward * forward / (2.0 * e2);
    }
    return std::min(1.0, std::exp(log_ratio));
}

/// Langevin Monte Carlo: HMC with a single leapfrog step.
inline IterationOutcome langevin_iteration(const PhaseState& state, const CanonicalDensity& c, double eps,
                                           Random& rng) {
    TrajectoryPlan plan;
    plan.epsilon = {eps, eps};
    plan.steps = {1, 1};
    return hmc_iteration(state, c, plan, rng);
}

/// p' = alpha p + sqrt(1 - alpha^2) n with n ~ N(0, M).
inline Vector partial_refresh(const Vector& p, double alpha, const KineticSpec& kinetic, Random& rng) {
    if (!(alpha >= -1.0 && alpha <= 1.0)) throw std::invalid_argument("refresh coefficient must lie in [-1, 1]");
    if (static_cast<std::size_t>(p.size()) != kinetic.dim()) throw std::invalid_argument("momentum dimension mismatch");
    Vector n = kinetic.sample(rng);
    return alpha * p + std::sqrt(1.0 - alpha * alpha) * n;
}

/// HMC with partial momentum refreshment. The momentum is negated after the
/// accept/reject step, so a rejection reverses the direction of motion.
inline IterationOutcome ghmc_iteration(const PhaseState& state, const CanonicalDensity& c, const TrajectoryPlan& plan,
                                       Random& rng) {
    plan.validate();
    PhaseState start(state.q, partial_refresh(state.p, plan.alpha_ref, c.kinetic, rng));
    IterationOutcome out = detail::propose_and_accept(start, c, plan, rng);
    out.state.p = -out.state.p;
    return out;
}

namespace detail {

/// Streaming weighted choice over a window, keeping one saved state.
struct WindowReservoir {
    double log_total = -kInfinity;
    std::optional<PhaseState> saved;

    void offer(const PhaseState& s, double log_density, Random& rng) {
        if (log_density == -kInfinity) return;
        const double new_total = log_add(log_total, log_density);
        if (!saved || rng.uniform() < std::exp(log_density - new_total)) saved = s;
        log_total = new_total;
    }
};

inline long draw_offset(const TrajectoryPlan& plan, Random& rng) {
    if (plan.window == 1) return 0;
    if (plan.window_weights.empty()) return rng.uniform_int(0, plan.window - 1);
    double total = 0.0;
    for (double w : plan.window_weights) total += w;
    double u = rng.uniform() * total;
    for (long i = 0; i < plan.window; ++i) {
        u -= plan.window_weights[static_cast<std::size_t>(i)];
        if (u < 0.0) return i;
    }
    return plan.window - 1;
}

}  // namespace detail

/// Windowed HMC.
///
/// The current state is placed at a random offset s in the reject window
/// (states 0..W-1); s steps are simulated backward and L-s forward. The accept
/// window (states L-W+1..L) is chosen with probability
/// min(1, sum of its densities / sum of the reject window's), and a state is
/// then picked from the chosen window in proportion to its density. Optional
/// weights multiply the densities: state i of the reject window gets w[i] and
/// state i of the accept window gets w[L-i], so the reversed sequence sees the
/// same weights. States past a divergence have density zero.
inline IterationOutcome windowed_hmc_iteration(const PhaseState& state, const CanonicalDensity& c,
                                               const TrajectoryPlan& plan, Random& rng) {
    plan.validate();
    const Target& target = c.target;
    const KineticSpec& kinetic = c.kinetic;
    PhaseState start(state.q, kinetic.sample(rng));
    const double eps = detail::draw_epsilon(plan, rng);
    const long steps = detail::draw_steps(plan, rng);
    const long w = plan.window;
    if (steps < w - 1) throw std::invalid_argument("windowed HMC needs at least W-1 steps");
    const long offset = detail::draw_offset(plan, rng);
    const double h0 = detail::start_energy(start, target, kinetic);

    auto log_weight = [&](long j) {
        return plan.window_weights.empty() ? 0.0 : std::log(plan.window_weights[static_cast<std::size_t>(j)]);
    };
    detail::WindowReservoir reject, accept;
    auto visit = [&](long index, const PhaseState& s, double h) {
        const double dh = h - h0;
        const double log_p = is_divergent(dh) ? -kInfinity : -dh;
        if (index <= w - 1) reject.offer(s, log_p + log_weight(index), rng);
        if (index >= steps - w + 1) accept.offer(s, log_p + log_weight(steps - index), rng);
    };

    long evals = 0;
    visit(offset, start, h0);
    for (int dir : {-1, 1}) {
        const long count = dir < 0 ? offset : steps - offset;
        if (count == 0) continue;
        LeapfrogStepper stepper(target, kinetic, dir * eps);
        stepper.reset(start);
        for (long i = 1; i <= count; ++i) {
            if (!stepper.step()) break;
            visit(offset + dir * i, stepper.state(), energy(stepper.state(), target, kinetic));
        }
        evals += stepper.gradient_evals();
    }

    IterationOutcome out;
    out.gradient_evals = evals;
    out.delta_h = reject.log_total - accept.log_total;
    out.divergent = accept.log_total == -kInfinity;
    out.accepted = detail::metropolis(out.delta_h, out.divergent, rng);
    out.acceptances = out.accepted ? 1 : 0;
    out.state = out.accepted ? *accept.saved : *reject.saved;
    out.moved_mode = detail::mode_change(target, start.q, out.state.q);
    return out;
}

enum class Kernel { hmc, rwm, lmc, ghmc, windowed, tempered };

inline std::string to_string(Kernel k) {
    switch (k) {
        case Kernel::hmc: return "hmc";
        case Kernel::rwm: return "rwm";
        case Kernel::lmc: return "lmc";
        case Kernel::ghmc: return "ghmc";
        case Kernel::windowed: return "windowed";
        case Kernel::tempered: return "tempered";
    }
    return "unknown";
}

inline Kernel parse_kernel(const std::string& name) {
    for (Kernel k : {Kernel::hmc, Kernel::rwm, Kernel::lmc, Kernel::ghmc, Kernel::windowed, Kernel::tempered})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown kernel '" + name + "'");
}

/// Per-iteration record of a chain. `cumulative_evals` counts gradient
/// evaluations; for random-walk Metropolis each proposal counts as one.
struct ChainRecord {
    std::vector<Vector> positions;
    std::vector<double> delta_h;
    std::vector<bool> accepted;
    std::vector<bool> divergent;
    std::vector<long> cumulative_evals;
    std::vector<long> proposals;
    std::vector<long> acceptances;
    std::vector<std::optional<bool>> moved_mode;

    std::size_t size() const { return positions.size(); }

    bool operator==(const ChainRecord&) const = default;
};

inline IterationOutcome kernel_iteration(Kernel kernel, const PhaseState& state, const CanonicalDensity& c,
                                         const TrajectoryPlan& plan, Random& rng) {
    switch (kernel) {
        case Kernel::hmc: return hmc_iteration(state, c, plan, rng);
        case Kernel::rwm: {
            plan.validate();
            IterationOutcome out = rwm_iteration(state.q, c.target, plan.epsilon, rng, plan.updates_per_iteration);
            out.gradient_evals = out.proposals;
            return out;
        }
        case Kernel::lmc: {
            TrajectoryPlan one = plan;
            one.steps = {1, 1};
            return hmc_iteration(state, c, one, rng);
        }
        case Kernel::ghmc: return ghmc_iteration(state, c, plan, rng);
        case Kernel::windowed: return windowed_hmc_iteration(state, c, plan, rng);
        case Kernel::tempered: return tempered_hmc_iteration(state, c, plan, rng);
    }
    throw std::invalid_argument("unknown kernel");
}

/// Run n iterations from `initial_q`. Deterministic given the seed.
inline ChainRecord run_chain(const Vector& initial_q, const CanonicalDensity& c, const TrajectoryPlan& plan,
                             Kernel kernel, long n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("a chain needs at least one iteration");
    if (static_cast<std::size_t>(initial_q.size()) != c.target.dim())
        throw std::invalid_argument("initial position has the wrong dimension");
    if (!std::isfinite(c.target.potential(initial_q)))
        throw std::domain_error("initial position has infinite potential");
    plan.validate();
    Random rng(seed);
    ChainRecord rec;
    rec.positions.reserve(static_cast<std::size_t>(n));
    // Only GHMC carries momentum between iterations; it starts at rest.
    PhaseState state(initial_q, Vector::Zero(initial_q.size()));
    long evals = 0;
    for (long i = 0; i < n; ++i) {
        IterationOutcome out = kernel_iteration(kernel, state, c, plan, rng);
        evals += out.gradient_evals;
        rec.positions.push_back(out.state.q);
        rec.delta_h.push_back(out.delta_h);
        rec.accepted.push_back(out.accepted);
        rec.divergent.push_back(out.divergent);
        rec.cumulative_evals.push_back(evals);
        rec.proposals.push_back(out.proposals);
        rec.acceptances.push_back(out.acceptances);
        rec.moved_mode.push_back(out.moved_mode);
        state = std::move(out.state);
    }
    return rec;
}

}  // namespace hmc

#endif  // HMC_SAMPLERS_HPP
