#ifndef HMC_INTEGRATORS_HPP
#define HMC_INTEGRATORS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hmc/model.hpp"

namespace hmc {

/// |H(end) - H(start)| above this marks a trajectory as divergent.
inline constexpr double kDivergenceThreshold = 1000.0;

inline bool is_divergent(double delta_h) {
    return !std::isfinite(delta_h) || std::abs(delta_h) > kDivergenceThreshold;
}

struct StepReport {
    PhaseState state;
    double hamiltonian_value = 0.0;
    int gradient_evals = 0;
};

struct TraceRow {
    int step = 0;
    PhaseState state;
    double hamiltonian = 0.0;
    double epsilon = 0.0;
};

using Trace = std::vector<TraceRow>;

struct TrajectoryResult {
    PhaseState state;
    double delta_h = 0.0;
    long gradient_evals = 0;
    bool divergent = false;
    // Set by short-cut trajectories that abandon the proposal.
    bool terminated = false;
};

namespace detail {

inline void require_step(double eps) {
    if (eps == 0.0 || !std::isfinite(eps)) throw std::invalid_argument("stepsize must be finite and non-zero");
}

inline void require_finite_step(double eps) {
    if (!std::isfinite(eps)) throw std::invalid_argument("stepsize must be finite");
}

inline void require_steps(long steps) {
    if (steps < 1) throw std::invalid_argument("a trajectory needs at least one step");
}

inline Vector checked_gradient(const Target& target, const Vector& q) {
    Vector g = target.gradient(q);
    if (!g.allFinite()) throw std::domain_error("gradient is not finite");
    return g;
}

inline double start_energy(const PhaseState& s, const Target& target, const KineticSpec& kinetic) {
    if (s.dim() != target.dim() || kinetic.dim() != target.dim())
        throw std::invalid_argument("state, target and kinetic dimensions must agree");
    double h = energy(s, target, kinetic);
    if (!std::isfinite(h)) throw std::domain_error("trajectory starts at a state of infinite energy");
    return h;
}

}  // namespace detail

/// Drift of q under p/m with reflection off box walls.
///
/// The momentum passed in is the half-kicked one; any coordinate that crosses
/// a wall is reflected back inside and its momentum negated, repeatedly, until
/// the coordinate is feasible.
inline PhaseState constrained_position_update(const PhaseState& state, const KineticSpec& kinetic, double eps,
                                              const Box& box) {
    box.validate();
    constexpr long kMaxReflections = 1'000'000;
    PhaseState out = state;
    Vector v = kinetic.velocity(state.p);
    for (Eigen::Index i = 0; i < out.q.size(); ++i) {
        double q = state.q[i] + eps * v[i];
        double p = state.p[i];
        const double lo = box.lower[i];
        const double hi = box.upper[i];
        long reflections = 0;
        while (q > hi || q < lo) {
            if (q > hi) {
                q = hi - (q - hi);
                p = -p;
            } else if (q < lo) {
                q = lo + (lo - q);
                p = -p;
            }
            if (++reflections > kMaxReflections)
                throw std::runtime_error("constraint reflection did not terminate");
        }
        out.q[i] = q;
        out.p[i] = p;
    }
    return out;
}

inline PhaseState constrained_position_update(const PhaseState& state, const KineticSpec& kinetic, double eps,
                                              const std::optional<Box>& box) {
    if (box) return constrained_position_update(state, kinetic, eps, *box);
    PhaseState out = state;
    out.q += eps * kinetic.velocity(state.p);
    return out;
}

/// Leapfrog stepper with a cached gradient, so consecutive steps cost one
/// gradient evaluation each. Uses the target's surrogate when it has one and
/// reflects off the target's constraints.
class LeapfrogStepper {
public:
    LeapfrogStepper(const Target& target, const KineticSpec& kinetic, double eps)
        : target_(&target), kinetic_(&kinetic), eps_(eps) {
        detail::require_finite_step(eps);
    }

    void reset(PhaseState s) {
        state_ = std::move(s);
        grad_ = target_->dynamics_gradient(state_.q);
        ++evals_;
    }

    void reset(PhaseState s, Vector gradient) {
        state_ = std::move(s);
        grad_ = std::move(gradient);
    }

    /// Returns false once the state stops being finite.
    bool step() {
        const double half = 0.5 * eps_;
        state_.p -= half * grad_;
        if (target_->constraints()) {
            state_ = constrained_position_update(state_, *kinetic_, eps_, *target_->constraints());
        } else {
            state_.q += eps_ * kinetic_->velocity(state_.p);
        }
        grad_ = target_->dynamics_gradient(state_.q);
        ++evals_;
        state_.p -= half * grad_;
        return state_.finite() && grad_.allFinite();
    }

    void set_step_size(double eps) {
        detail::require_finite_step(eps);
        eps_ = eps;
    }

    void scale_momentum(double factor) { state_.p *= factor; }
    void divide_momentum(double factor) { state_.p /= factor; }
    void negate_momentum() { state_.p = -state_.p; }

    double step_size() const { return eps_; }
    const PhaseState& state() const { return state_; }
    const Vector& gradient() const { return grad_; }
    long gradient_evals() const { return evals_; }

private:
    const Target* target_;
    const KineticSpec* kinetic_;
    double eps_;
    PhaseState state_;
    Vector grad_;
    long evals_ = 0;
};

inline StepReport euler_step(const PhaseState& state, const Target& target, const KineticSpec& kinetic,
                             double eps) {
    detail::require_step(eps);
    Vector g = detail::checked_gradient(target, state.q);
    PhaseState next = state;
    next.p = state.p - eps * g;
    next.q = state.q + eps * kinetic.velocity(state.p);
    return {next, energy(next, target, kinetic), 1};
}

inline StepReport modified_euler_step(const PhaseState& state, const Target& target, const KineticSpec& kinetic,
                                      double eps) {
    detail::require_step(eps);
    Vector g = detail::checked_gradient(target, state.q);
    PhaseState next = state;
    next.p = state.p - eps * g;
    next.q = state.q + eps * kinetic.velocity(next.p);
    return {next, energy(next, target, kinetic), 1};
}

/// Half step for p, full step for q, half step for p.
inline StepReport leapfrog_step(const PhaseState& state, const Target& target, const KineticSpec& kinetic,
                                double eps) {
    detail::require_step(eps);
    const double half = 0.5 * eps;
    PhaseState next = state;
    next.p -= half * detail::checked_gradient(target, state.q);
    next = constrained_position_update(next, kinetic, eps, target.constraints());
    next.p -= half * detail::checked_gradient(target, next.q);
    return {next, energy(next, target, kinetic), 2};
}

/// L leapfrog steps sharing gradients between steps (L + 1 evaluations).
inline TrajectoryResult leapfrog_trajectory(const PhaseState& start, const Target& target, const KineticSpec& kinetic,
                                            double eps, long steps, Trace* trace = nullptr) {
    detail::require_steps(steps);
    const double h0 = detail::start_energy(start, target, kinetic);
    LeapfrogStepper stepper(target, kinetic, eps);
    stepper.reset(start);
    if (trace) trace->push_back({0, start, h0, eps});
    bool finite = true;
    for (long i = 0; i < steps && finite; ++i) {
        finite = stepper.step();
        if (trace) trace->push_back({static_cast<int>(i + 1), stepper.state(), energy(stepper.state(), target, kinetic), eps});
    }
    TrajectoryResult out{stepper.state(), 0.0, stepper.gradient_evals()};
    out.delta_h = finite ? energy(out.state, target, kinetic) - h0 : kInfinity;
    out.divergent = is_divergent(out.delta_h);
    return out;
}

/// Leapfrog with unit masses and a separate stepsize per coordinate.
inline TrajectoryResult leapfrog_trajectory(const PhaseState& start, const Target& target, const Vector& step_sizes,
                                            long steps) {
    detail::require_steps(steps);
    if (static_cast<std::size_t>(step_sizes.size()) != target.dim())
        throw std::invalid_argument("one stepsize per coordinate is required");
    for (Eigen::Index i = 0; i < step_sizes.size(); ++i) detail::require_step(step_sizes[i]);
    const KineticSpec unit = KineticSpec::unit(target.dim());
    const double h0 = detail::start_energy(start, target, unit);
    const Vector half = 0.5 * step_sizes;
    PhaseState s = start;
    Vector g = target.dynamics_gradient(s.q);
    long evals = 1;
    for (long i = 0; i < steps; ++i) {
        s.p -= half.cwiseProduct(g);
        s.q += step_sizes.cwiseProduct(s.p);
        g = target.dynamics_gradient(s.q);
        ++evals;
        s.p -= half.cwiseProduct(g);
    }
    TrajectoryResult out{s, energy(s, target, unit) - h0, evals};
    out.divergent = is_divergent(out.delta_h);
    return out;
}

/// Tempered leapfrog trajectory.
///
/// Steps in the first half multiply p by sqrt(alpha) before the first
/// half-kick and after the second; steps in the second half divide at the
/// same points. For odd L the middle step multiplies before and divides after.
inline TrajectoryResult tempered_trajectory(const PhaseState& start, const Target& target, const KineticSpec& kinetic,
                                            double eps, long steps, double alpha, Trace* trace = nullptr) {
    detail::require_steps(steps);
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("tempering factor must be positive");
    const double h0 = detail::start_energy(start, target, kinetic);
    const double factor = std::sqrt(alpha);
    const long half = steps / 2;
    const bool odd = steps % 2 == 1;

    // The stepper kicks with the cached gradient, so scaling before the step
    // and after it brackets exactly the two half-kicks.
    LeapfrogStepper stepper(target, kinetic, eps);
    stepper.reset(start);
    if (trace) trace->push_back({0, start, h0, eps});
    bool finite = true;
    for (long i = 0; i < steps && finite; ++i) {
        const bool heating = i < half;
        const bool middle = odd && i == half;
        if (heating || middle)
            stepper.scale_momentum(factor);
        else
            stepper.divide_momentum(factor);
        finite = stepper.step();
        if (heating)
            stepper.scale_momentum(factor);
        else
            stepper.divide_momentum(factor);
        if (trace) trace->push_back({static_cast<int>(i + 1), stepper.state(), energy(stepper.state(), target, kinetic), eps});
    }
    TrajectoryResult out{stepper.state(), 0.0, stepper.gradient_evals()};
    out.delta_h = finite ? energy(out.state, target, kinetic) - h0 : kInfinity;
    out.divergent = is_divergent(out.delta_h);
    return out;
}

/// Exact flow of a Hamiltonian over time t, applied in place.
using ExactFlow = std::function<void(PhaseState&, double)>;

/// Exact flow for U0(q) = sum (q_i - mean_i)^2 / (2 sd_i^2) with K = sum p_i^2 / (2 m_i).
inline ExactFlow gaussian_exact_flow(Vector mean, Vector sds, const KineticSpec& kinetic) {
    if (mean.size() != sds.size() || static_cast<std::size_t>(sds.size()) != kinetic.dim())
        throw std::invalid_argument("exact flow dimensions disagree");
    Vector masses = kinetic.masses();
    Vector omega = (sds.cwiseProduct(masses.cwiseSqrt())).cwiseInverse();
    return [mean = std::move(mean), masses = std::move(masses), omega = std::move(omega)](PhaseState& s, double t) {
        for (Eigen::Index i = 0; i < s.q.size(); ++i) {
            const double x = s.q[i] - mean[i];
            const double c = std::cos(omega[i] * t);
            const double sn = std::sin(omega[i] * t);
            const double mw = masses[i] * omega[i];
            s.q[i] = mean[i] + x * c + s.p[i] / mw * sn;
            s.p[i] = s.p[i] * c - mw * x * sn;
        }
    };
}

struct SplitScheme {
    enum class Kind { analytic_substep, nested_cheap_expensive, data_subsets };

    Kind kind = Kind::nested_cheap_expensive;
    int inner_count = 1;
    // Exact flow of U0 + K; required by the analytic kind.
    ExactFlow analytic_solver;
    bool subset_order_randomized = true;
};

struct SplitResult {
    PhaseState state;
    double delta_h = 0.0;
    long expensive_gradient_evals = 0;
    bool divergent = false;
};

/// Trajectory of L steps of a split-Hamiltonian discretization.
///
/// Split parts are read from the target: for the analytic and nested kinds,
/// parts[0] is U0 (tractable or cheap) and parts[1] is U1. For data subsets,
/// each part is U_m and the m-th inner step uses M * U_m with stepsize eps / M.
/// The reported evaluation count is of U1 gradients (analytic, nested) or of
/// subset gradients (data subsets).
inline SplitResult split_trajectory(const PhaseState& start, const Target& target, const KineticSpec& kinetic,
                                    double eps, long steps, const SplitScheme& scheme, Random& rng) {
    detail::require_step(eps);
    detail::require_steps(steps);
    const auto& parts = target.split_parts();
    const double h0 = detail::start_energy(start, target, kinetic);
    PhaseState s = start;
    long evals = 0;
    const double half = 0.5 * eps;

    switch (scheme.kind) {
        case SplitScheme::Kind::analytic_substep: {
            if (parts.size() != 2) throw std::invalid_argument("analytic split needs parts [U0, U1]");
            if (!scheme.analytic_solver) throw std::invalid_argument("analytic split needs an exact flow");
            const PotentialTerm& residual = parts[1];
            Vector g1 = residual.gradient(s.q);
            ++evals;
            for (long i = 0; i < steps; ++i) {
                s.p -= half * g1;
                scheme.analytic_solver(s, eps);
                g1 = residual.gradient(s.q);
                ++evals;
                s.p -= half * g1;
            }
            break;
        }
        case SplitScheme::Kind::nested_cheap_expensive: {
            if (parts.size() != 2) throw std::invalid_argument("nested split needs parts [U0, U1]");
            if (scheme.inner_count < 1) throw std::invalid_argument("inner step count must be at least one");
            const PotentialTerm& cheap = parts[0];
            const PotentialTerm& expensive = parts[1];
            const double inner = eps / scheme.inner_count;
            const double inner_half = 0.5 * inner;
            Vector g1 = expensive.gradient(s.q);
            ++evals;
            Vector g0 = cheap.gradient(s.q);
            for (long i = 0; i < steps; ++i) {
                s.p -= half * g1;
                for (int m = 0; m < scheme.inner_count; ++m) {
                    s.p -= inner_half * g0;
                    s.q += inner * kinetic.velocity(s.p);
                    g0 = cheap.gradient(s.q);
                    s.p -= inner_half * g0;
                }
                g1 = expensive.gradient(s.q);
                ++evals;
                s.p -= half * g1;
            }
            break;
        }
        case SplitScheme::Kind::data_subsets: {
            if (parts.empty()) throw std::invalid_argument("data-subset split needs parts");
            const auto count = static_cast<int>(parts.size());
            const double inner = eps / count;
            const double inner_half = 0.5 * inner;
            std::vector<int> order(parts.size());
            std::iota(order.begin(), order.end(), 0);
            if (scheme.subset_order_randomized) std::shuffle(order.begin(), order.end(), rng.engine());
            for (long i = 0; i < steps; ++i) {
                for (int m : order) {
                    const PotentialTerm& part = parts[static_cast<std::size_t>(m)];
                    s.p -= (inner_half * count) * part.gradient(s.q);
                    s.q += inner * kinetic.velocity(s.p);
                    s.p -= (inner_half * count) * part.gradient(s.q);
                    evals += 2;
                }
            }
            break;
        }
    }
    SplitResult out{s, 0.0, evals};
    out.delta_h = s.finite() ? energy(s, target, kinetic) - h0 : kInfinity;
    out.divergent = is_divergent(out.delta_h);
    return out;
}

/// Magnitudes of the eigenvalues of one leapfrog step for H = q^2/2s^2 + p^2/2,
/// smaller first.
inline std::pair<double, double> stability_eigenvalues(double sigma, double eps) {
    if (!(sigma > 0.0) || !(eps > 0.0)) throw std::invalid_argument("sigma and stepsize must be positive");
    const double r = eps / sigma;
    const double diag = 1.0 - r * r / 2.0;
    const std::complex<double> root = std::sqrt(std::complex<double>(r * r / 4.0 - 1.0, 0.0));
    const double larger = std::max(std::abs(diag + r * root), std::abs(diag - r * root));
    return {1.0 / larger, larger};
}

}  // namespace hmc

#endif  // HMC_INTEGRATORS_HPP
