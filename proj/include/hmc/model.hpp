#ifndef HMC_MODEL_HPP
#define HMC_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Per-chain random source. Every kernel draws through one of these so that
/// two kernels fed the same seed consume identical streams.
class Random {
public:
    explicit Random(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return unit_(engine_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform on the closed integer range [lo, hi].
    long uniform_int(long lo, long hi) {
        std::uniform_int_distribution<long> dist(lo, hi);
        return dist(engine_);
    }

    double normal() { return normal_(engine_); }

    Vector normal(std::size_t d) {
        Vector v(static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal();
        return v;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Position and momentum of equal dimension.
struct PhaseState {
    Vector q;
    Vector p;

    PhaseState() = default;
    PhaseState(Vector position, Vector momentum) : q(std::move(position)), p(std::move(momentum)) {
        if (q.size() != p.size()) {
            std::ostringstream msg;
            msg << "position has dimension " << q.size() << " but momentum has " << p.size();
            throw std::invalid_argument(msg.str());
        }
    }

    std::size_t dim() const { return static_cast<std::size_t>(q.size()); }

    bool finite() const { return q.allFinite() && p.allFinite(); }
};

/// A scalar potential together with its analytic gradient.
struct PotentialTerm {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
};

/// Per-coordinate bounds; unbounded sides hold -inf / +inf.
struct Box {
    Vector lower;
    Vector upper;

    static Box unbounded(std::size_t d) {
        return {Vector::Constant(static_cast<Eigen::Index>(d), -kInfinity),
                Vector::Constant(static_cast<Eigen::Index>(d), kInfinity)};
    }

    void validate() const {
        if (lower.size() != upper.size()) throw std::invalid_argument("box bounds differ in dimension");
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            if (std::isnan(lower[i]) || std::isnan(upper[i]) || !(lower[i] < upper[i])) {
                std::ostringstream msg;
                msg << "constraint " << i << " requires lower < upper, got [" << lower[i] << ", " << upper[i]
                    << "]";
                throw std::invalid_argument(msg.str());
            }
        }
    }

    bool contains(const Vector& q) const {
        for (Eigen::Index i = 0; i < q.size(); ++i)
            if (q[i] < lower[i] || q[i] > upper[i]) return false;
        return true;
    }
};

/// A density to sample, given as U(q) = -log density + const.
///
/// Optional extras: box constraints (potential is +inf outside), an additive
/// split of the potential into parts, a cheaper surrogate used only while
/// simulating trajectories, and a mode classifier for multimodal targets.
/// Immutable once built; the `with_*` members return modified copies.
class Target {
public:
    Target(std::size_t dim, PotentialTerm potential, std::string name = {})
        : dim_(dim), potential_(std::move(potential)), name_(std::move(name)) {
        if (dim_ == 0) throw std::invalid_argument("target dimension must be positive");
        if (!potential_.value || !potential_.gradient)
            throw std::invalid_argument("target needs both a potential and a gradient");
    }

    std::size_t dim() const { return dim_; }
    const std::string& name() const { return name_; }

    double potential(const Vector& q) const {
        require_dim(q);
        if (constraints_ && !constraints_->contains(q)) return kInfinity;
        return potential_.value(q);
    }

    Vector gradient(const Vector& q) const {
        require_dim(q);
        return potential_.gradient(q);
    }

    /// Gradient used for trajectory simulation: the surrogate's when present.
    Vector dynamics_gradient(const Vector& q) const {
        require_dim(q);
        return surrogate_ ? surrogate_->gradient(q) : potential_.gradient(q);
    }

    const PotentialTerm& term() const { return potential_; }
    const std::optional<Box>& constraints() const { return constraints_; }
    const std::vector<PotentialTerm>& split_parts() const { return split_parts_; }
    const std::optional<PotentialTerm>& surrogate() const { return surrogate_; }
    const std::function<int(const Vector&)>& mode_of() const { return mode_of_; }

    Target with_constraints(Box box) const {
        if (static_cast<std::size_t>(box.lower.size()) != dim_)
            throw std::invalid_argument("constraint dimension does not match target");
        box.validate();
        Target t = *this;
        t.constraints_ = std::move(box);
        return t;
    }

    Target with_split(std::vector<PotentialTerm> parts) const {
        if (parts.empty()) throw std::invalid_argument("split needs at least one part");
        for (const auto& part : parts)
            if (!part.value || !part.gradient) throw std::invalid_argument("split part is incomplete");
        Target t = *this;
        t.split_parts_ = std::move(parts);
        return t;
    }

    Target with_surrogate(PotentialTerm surrogate) const {
        if (!surrogate.value || !surrogate.gradient) throw std::invalid_argument("surrogate is incomplete");
        Target t = *this;
        t.surrogate_ = std::move(surrogate);
        return t;
    }

    Target with_mode_classifier(std::function<int(const Vector&)> classifier) const {
        Target t = *this;
        t.mode_of_ = std::move(classifier);
        return t;
    }

    Target with_name(std::string name) const {
        Target t = *this;
        t.name_ = std::move(name);
        return t;
    }

private:
    void require_dim(const Vector& q) const {
        if (static_cast<std::size_t>(q.size()) != dim_) {
            std::ostringstream msg;
            msg << "expected a " << dim_ << "-dimensional position, got " << q.size();
            throw std::invalid_argument(msg.str());
        }
    }

    std::size_t dim_;
    PotentialTerm potential_;
    std::string name_;
    std::optional<Box> constraints_;
    std::vector<PotentialTerm> split_parts_;
    std::optional<PotentialTerm> surrogate_;
    std::function<int(const Vector&)> mode_of_;
};

/// Diagonal mass matrix: K(p) = sum p_i^2 / (2 m_i), p_i ~ N(0, m_i).
class KineticSpec {
public:
    explicit KineticSpec(Vector masses) : masses_(std::move(masses)) {
        if (masses_.size() == 0) throw std::invalid_argument("kinetic energy needs at least one mass");
        for (Eigen::Index i = 0; i < masses_.size(); ++i)
            if (!(masses_[i] > 0.0) || !std::isfinite(masses_[i]))
                throw std::invalid_argument("masses must be positive and finite");
        inv_masses_ = masses_.cwiseInverse();
        sqrt_masses_ = masses_.cwiseSqrt();
    }

    static KineticSpec unit(std::size_t d) { return KineticSpec(Vector::Ones(static_cast<Eigen::Index>(d))); }

    std::size_t dim() const { return static_cast<std::size_t>(masses_.size()); }
    const Vector& masses() const { return masses_; }

    double energy(const Vector& p) const { return 0.5 * p.cwiseProduct(p).dot(inv_masses_); }

    /// dK/dp, the position velocity.
    Vector velocity(const Vector& p) const { return p.cwiseProduct(inv_masses_); }

    Vector sample(Random& rng) const {
        Vector p(masses_.size());
        for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = sqrt_masses_[i] * rng.normal();
        return p;
    }

private:
    Vector masses_;
    Vector inv_masses_;
    Vector sqrt_masses_;
};

/// P(q, p) proportional to exp(-(U(q) + K(p)) / T). Samplers use T = 1.
struct CanonicalDensity {
    Target target;
    KineticSpec kinetic;
    double temperature = 1.0;

    CanonicalDensity(Target t, KineticSpec k, double temp = 1.0)
        : target(std::move(t)), kinetic(std::move(k)), temperature(temp) {
        if (target.dim() != kinetic.dim()) throw std::invalid_argument("target and kinetic dimensions differ");
        if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    }

    static CanonicalDensity unit_mass(Target t) {
        auto d = t.dim();
        return {std::move(t), KineticSpec::unit(d)};
    }

    double log_density(const PhaseState& s) const {
        return -(target.potential(s.q) + kinetic.energy(s.p)) / temperature;
    }
};

/// U(q) + K(p), without validation. Non-finite results signal divergence.
inline double energy(const PhaseState& s, const Target& target, const KineticSpec& kinetic) {
    return target.potential(s.q) + kinetic.energy(s.p);
}

inline double hamiltonian(const PhaseState& state, const Target& target, const KineticSpec& kinetic) {
    if (state.q.size() != state.p.size() || state.dim() != target.dim() || kinetic.dim() != target.dim())
        throw std::invalid_argument("state, target and kinetic dimensions must agree");
    double u = target.potential(state.q);
    if (!std::isfinite(u)) throw std::domain_error("potential energy is not finite at this position");
    return u + kinetic.energy(state.p);
}

inline Vector sample_momentum(const KineticSpec& kinetic, Random& rng) { return kinetic.sample(rng); }

/// Largest |analytic - central difference| / (1 + |analytic|) over coordinates.
inline double check_gradient(const Target& target, const Vector& q, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    Vector analytic = target.gradient(q);
    double worst = 0.0;
    Vector probe = q;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        probe[i] = q[i] + h;
        double up = target.potential(probe);
        probe[i] = q[i] - h;
        double down = target.potential(probe);
        probe[i] = q[i];
        if (!std::isfinite(up) || !std::isfinite(down))
            throw std::domain_error("potential is not finite at a finite-difference probe");
        double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(analytic[i] - numeric) / (1.0 + std::abs(analytic[i])));
    }
    return worst;
}

}  // namespace hmc

#endif  // HMC_MODEL_HPP
