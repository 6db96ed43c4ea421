#ifndef HMC_TARGETS_HPP
#define HMC_TARGETS_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "hmc/model.hpp"

namespace hmc {

/// Gaussian with U(q) = (q - mean)' inv(cov) (q - mean) / 2.
inline Target gaussian_target(Vector mean, const Matrix& cov, std::string name = "gaussian") {
    const auto d = mean.size();
    if (d == 0 || cov.rows() != d || cov.cols() != d) throw std::invalid_argument("covariance must be d x d");
    if (!cov.isApprox(cov.transpose(), 1e-12)) throw std::invalid_argument("covariance must be symmetric");
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("covariance must be positive definite");
    Matrix precision = llt.solve(Matrix::Identity(d, d));
    precision = 0.5 * (precision + precision.transpose());
    PotentialTerm term{
        [mean, precision](const Vector& q) {
            const Vector x = q - mean;
            return 0.5 * x.dot(precision * x);
        },
        [mean, precision](const Vector& q) -> Vector { return precision * (q - mean); }};
    return Target(static_cast<std::size_t>(d), std::move(term), std::move(name));
}

/// Independent coordinates with the given standard deviations.
inline Target diagonal_gaussian(Vector mean, const Vector& sds, std::string name = "gaussian") {
    if (mean.size() != sds.size() || sds.size() == 0) throw std::invalid_argument("mean and sds must match");
    for (Eigen::Index i = 0; i < sds.size(); ++i)
        if (!(sds[i] > 0.0) || !std::isfinite(sds[i])) throw std::invalid_argument("sds must be positive");
    Vector inv_var = sds.cwiseAbs2().cwiseInverse();
    PotentialTerm term{
        [mean, inv_var](const Vector& q) {
            const Vector x = q - mean;
            return 0.5 * x.cwiseAbs2().dot(inv_var);
        },
        [mean, inv_var](const Vector& q) -> Vector { return (q - mean).cwiseProduct(inv_var); }};
    const auto d = static_cast<std::size_t>(sds.size());
    return Target(d, std::move(term), std::move(name));
}

struct MixtureComponent {
    double weight;
    Vector mean;
    Matrix cov;
};

/// U(q) = -log sum_k w_k N(q; mean_k, cov_k), normalized densities. Mode
/// membership is the index of the nearest component mean.
inline Target mixture_target(const std::vector<MixtureComponent>& components, std::string name = "mixture") {
    if (components.empty()) throw std::invalid_argument("mixture needs components");
    const auto d = components.front().mean.size();
    double total = 0.0;
    struct Prepared {
        double log_norm;
        Vector mean;
        Matrix precision;
    };
    std::vector<Prepared> parts;
    for (const auto& c : components) {
        if (!(c.weight > 0.0)) throw std::invalid_argument("mixture weights must be positive");
        if (c.mean.size() != d || c.cov.rows() != d || c.cov.cols() != d)
            throw std::invalid_argument("mixture components must share a dimension");
        Eigen::LLT<Matrix> llt(c.cov);
        if (llt.info() != Eigen::Success) throw std::invalid_argument("component covariance must be positive definite");
        const Matrix lower = llt.matrixL();
        const double log_det = 2.0 * lower.diagonal().array().log().sum();
        const double log_norm = std::log(c.weight) - 0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det);
        parts.push_back({log_norm, c.mean, llt.solve(Matrix::Identity(d, d))});
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to one");

    auto log_terms = [parts](const Vector& q) {
        std::vector<double> out;
        for (const auto& p : parts) {
            const Vector x = q - p.mean;
            out.push_back(p.log_norm - 0.5 * x.dot(p.precision * x));
        }
        return out;
    };
    auto log_sum = [](const std::vector<double>& v) {
        double m = -kInfinity;
        for (double x : v) m = std::max(m, x);
        double s = 0.0;
        for (double x : v) s += std::exp(x - m);
        return m + std::log(s);
    };
    PotentialTerm term{
        [log_terms, log_sum](const Vector& q) { return -log_sum(log_terms(q)); },
        [parts, log_terms, log_sum](const Vector& q) -> Vector {
            const auto lt = log_terms(q);
            const double total_log = log_sum(lt);
            Vector g = Vector::Zero(q.size());
            for (std::size_t k = 0; k < parts.size(); ++k)
                g += std::exp(lt[k] - total_log) * (parts[k].precision * (q - parts[k].mean));
            return g;
        }};
    std::vector<Vector> means;
    for (const auto& c : components) means.push_back(c.mean);
    auto nearest = [means](const Vector& q) {
        int best = 0;
        double best_d = kInfinity;
        for (std::size_t k = 0; k < means.size(); ++k) {
            const double dist = (q - means[k]).squaredNorm();
            if (dist < best_d) {
                best_d = dist;
                best = static_cast<int>(k);
            }
        }
        return best;
    };
    return Target(static_cast<std::size_t>(d), std::move(term), std::move(name)).with_mode_classifier(nearest);
}

/// U(q) = sum_i u(q_i).
inline Target replicated_target(std::function<double(double)> u, std::function<double(double)> du, std::size_t d,
                                std::string name = "replicated") {
    if (!u || !du) throw std::invalid_argument("replicated target needs u and du");
    PotentialTerm term{
        [u](const Vector& q) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < q.size(); ++i) s += u(q[i]);
            return s;
        },
        [du](const Vector& q) -> Vector {
            Vector g(q.size());
            for (Eigen::Index i = 0; i < q.size(); ++i) g[i] = du(q[i]);
            return g;
        }};
    return Target(d, std::move(term), std::move(name));
}

/// d independent standard normals.
inline Target replicated_gaussian(std::size_t d) {
    return replicated_target([](double x) { return 0.5 * x * x; }, [](double x) { return x; }, d,
                             "replicated_gaussian");
}

inline Matrix correlated_2d_cov(double rho) {
    Matrix cov(2, 2);
    cov << 1.0, rho, rho, 1.0;
    return cov;
}

/// Standard deviations 0.01, 0.02, ..., 1.00.
inline Vector gauss100d_sds() {
    Vector sds(100);
    for (int i = 0; i < 100; ++i) sds[i] = (i + 1) / 100.0;
    return sds;
}

inline const std::vector<std::string>& figure_target_names() {
    static const std::vector<std::string> names{"gauss1d", "gauss2d_95", "gauss2d_98", "gauss100d", "mixture_fig9"};
    return names;
}

inline Target make_figure_target(const std::string& name) {
    if (name == "gauss1d") return diagonal_gaussian(Vector::Zero(1), Vector::Ones(1), name);
    if (name == "gauss2d_95") return gaussian_target(Vector::Zero(2), correlated_2d_cov(0.95), name);
    if (name == "gauss2d_98") return gaussian_target(Vector::Zero(2), correlated_2d_cov(0.98), name);
    if (name == "gauss100d") return diagonal_gaussian(Vector::Zero(100), gauss100d_sds(), name);
    if (name == "mixture_fig9") {
        Vector far(2);
        far << 10.0, 10.0;
        return mixture_target({{0.5, Vector::Zero(2), Matrix::Identity(2, 2)}, {0.5, far, 2.0 * Matrix::Identity(2, 2)}},
                              name);
    }
    throw std::invalid_argument("unknown target '" + name + "'");
}

/// The same distribution expressed in q' = A q: U'(q') = U(inv(A) q').
inline Target apply_linear_transform(const Target& target, const Matrix& a) {
    const auto d = static_cast<Eigen::Index>(target.dim());
    if (a.rows() != d || a.cols() != d) throw std::invalid_argument("transform must be d x d");
    if (target.constraints()) throw std::invalid_argument("box constraints do not survive a general linear transform");
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw std::invalid_argument("transform matrix is singular");
    const Matrix inv = lu.inverse();
    auto transform = [inv](const PotentialTerm& t) {
        return PotentialTerm{[inv, f = t.value](const Vector& q) { return f(inv * q); },
                             [inv, g = t.gradient](const Vector& q) -> Vector { return inv.transpose() * g(inv * q); }};
    };
    Target out(target.dim(), transform(target.term()), target.name() + "_transformed");
    if (!target.split_parts().empty()) {
        std::vector<PotentialTerm> parts;
        for (const auto& p : target.split_parts()) parts.push_back(transform(p));
        out = out.with_split(std::move(parts));
    }
    if (target.surrogate()) out = out.with_surrogate(transform(*target.surrogate()));
    return out;
}

/// Mass matrix that makes HMC in q' = A q equivalent to HMC in q with mass M:
/// M' = inv(A)' M inv(A).
inline Matrix transformed_kinetic(const Matrix& m, const Matrix& a) {
    if (m.rows() != m.cols() || a.rows() != a.cols() || m.rows() != a.rows())
        throw std::invalid_argument("mass and transform must be square and the same size");
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("mass matrix must be positive definite");
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw std::invalid_argument("transform matrix is singular");
    const Matrix inv = lu.inverse();
    return inv.transpose() * m * inv;
}

inline Matrix transformed_kinetic(const Vector& masses, const Matrix& a) {
    return transformed_kinetic(Matrix(masses.asDiagonal()), a);
}

/// Per-coordinate stepsizes eps_i = s_i eps for use with unit masses.
inline Vector multiple_stepsize_plan(const Vector& scales, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("stepsize must be positive");
    for (Eigen::Index i = 0; i < scales.size(); ++i)
        if (!(scales[i] > 0.0) || !std::isfinite(scales[i])) throw std::invalid_argument("scales must be positive");
    return scales * eps;
}

/// Masses 1 / s_i^2, the single-stepsize equivalent of multiple_stepsize_plan.
inline KineticSpec equivalent_kinetic(const Vector& scales) { return KineticSpec(scales.cwiseAbs2().cwiseInverse()); }

}  // namespace hmc

#endif  // HMC_TARGETS_HPP
