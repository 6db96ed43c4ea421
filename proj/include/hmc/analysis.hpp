#ifndef HMC_ANALYSIS_HPP
#define HMC_ANALYSIS_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmc/samplers.hpp"

namespace hmc {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Large-d acceptance rate when the energy error has mean mu: 2 Phi(-sqrt(mu/2)).
inline double acceptance_from_mu(double mu) {
    if (!(mu >= 0.0)) throw std::invalid_argument("mu must be non-negative");
    return 2.0 * normal_cdf(-std::sqrt(mu / 2.0));
}

enum class ScalingMethod { rwm, hmc, lmc };

inline std::string to_string(ScalingMethod m) {
    switch (m) {
        case ScalingMethod::rwm: return "rwm";
        case ScalingMethod::hmc: return "hmc";
        case ScalingMethod::lmc: return "lmc";
    }
    return "unknown";
}

inline ScalingMethod parse_scaling_method(const std::string& name) {
    for (ScalingMethod m : {ScalingMethod::rwm, ScalingMethod::hmc, ScalingMethod::lmc})
        if (to_string(m) == name) return m;
    throw std::invalid_argument("unknown scaling method '" + name + "'");
}

struct ScalingResult {
    double mu = 0.0;
    double acceptance = 1.0;
    double cost = 0.0;
    ScalingMethod method = ScalingMethod::hmc;
};

/// Cost per unit of progress, up to a constant: 1 / (a(mu) mu^k) with k = 1,
/// 1/4 and 1/3 for random-walk Metropolis, HMC and Langevin MC.
inline double scaling_cost(ScalingMethod method, double mu) {
    const double k = method == ScalingMethod::rwm ? 1.0 : method == ScalingMethod::hmc ? 0.25 : 1.0 / 3.0;
    return 1.0 / (acceptance_from_mu(mu) * std::pow(mu, k));
}

/// Minimizes the cost by golden-section search on log mu within [lo, hi].
inline ScalingResult optimal_acceptance(ScalingMethod method, double log_mu_lo = -10.0, double log_mu_hi = 5.0,
                                        double tol = 1e-6) {
    if (!(log_mu_lo < log_mu_hi)) throw std::invalid_argument("search interval is empty");
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [method](double x) { return scaling_cost(method, std::exp(x)); };
    double a = log_mu_lo, b = log_mu_hi;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    const double mu = std::exp(0.5 * (a + b));
    return {mu, acceptance_from_mu(mu), scaling_cost(method, mu), method};
}

/// Integrated autocorrelation time 1 + 2 sum rho_k, truncated by the initial
/// positive sequence rule (stop at the first non-positive sum of an adjacent
/// pair of autocovariances).
inline double integrated_autocorrelation(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 100) throw std::invalid_argument("autocorrelation needs at least 100 values");
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = series[i] - mean;
    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += centered[i] * centered[i + lag];
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0.0)) throw std::domain_error("autocorrelation is undefined for a constant series");
    double sum = -c0;
    for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
        const double pair = autocov(2 * m) + autocov(2 * m + 1);
        if (!(pair > 0.0)) break;
        sum += 2.0 * pair;
    }
    return std::max(sum / c0, 1.0 / static_cast<double>(n));
}

/// N / tau, capped at N.
inline double effective_sample_size(const std::vector<double>& series) {
    const double n = static_cast<double>(series.size());
    return std::min(n, n / integrated_autocorrelation(series));
}

struct DeltaStats {
    double mean = 0.0;
    double variance = 0.0;
    double mean_exp_neg = 0.0;
    std::size_t count = 0;
};

/// Moments of the energy error over every proposal, accepted or not.
/// Non-finite values (abandoned trajectories) are skipped.
inline DeltaStats empirical_delta_stats(const std::vector<double>& delta_h) {
    DeltaStats s;
    for (double d : delta_h) {
        if (!std::isfinite(d)) continue;
        ++s.count;
        s.mean += d;
        s.mean_exp_neg += std::exp(-d);
    }
    if (s.count == 0) throw std::invalid_argument("no finite energy errors to summarize");
    s.mean /= static_cast<double>(s.count);
    s.mean_exp_neg /= static_cast<double>(s.count);
    for (double d : delta_h)
        if (std::isfinite(d)) s.variance += (d - s.mean) * (d - s.mean);
    s.variance = s.count > 1 ? s.variance / static_cast<double>(s.count - 1) : 0.0;
    return s;
}

inline DeltaStats empirical_delta_stats(const ChainRecord& chain) { return empirical_delta_stats(chain.delta_h); }

struct DiagnosticsReport {
    std::size_t iterations = 0;  // after burn-in
    std::size_t burn_in = 0;
    std::vector<double> means;
    std::vector<double> sds;
    double rejection_rate = 0.0;
    std::size_t divergences = 0;
    std::vector<std::size_t> monitored;
    // Empty where the series is constant or too short.
    std::vector<std::optional<double>> tau;
    std::vector<std::optional<double>> ess;
    long gradient_evals = 0;
};

/// Summary of a chain after discarding `burn_in` iterations. Autocorrelation
/// is reported for the monitored coordinates (all when `monitored` is empty).
inline DiagnosticsReport summarize(const ChainRecord& chain, std::size_t burn_in = 0,
                                   std::vector<std::size_t> monitored = {}) {
    if (chain.size() == 0) throw std::invalid_argument("cannot summarize an empty chain");
    if (burn_in >= chain.size()) throw std::invalid_argument("burn-in leaves no iterations");
    const std::size_t d = static_cast<std::size_t>(chain.positions.front().size());
    if (monitored.empty())
        for (std::size_t i = 0; i < d; ++i) monitored.push_back(i);
    for (std::size_t i : monitored)
        if (i >= d) throw std::invalid_argument("monitored coordinate out of range");

    DiagnosticsReport r;
    r.burn_in = burn_in;
    r.iterations = chain.size() - burn_in;
    r.monitored = monitored;
    const double n = static_cast<double>(r.iterations);
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(d));
    Vector sq = Vector::Zero(static_cast<Eigen::Index>(d));
    long proposals = 0, acceptances = 0;
    for (std::size_t t = burn_in; t < chain.size(); ++t) {
        sum += chain.positions[t];
        proposals += chain.proposals[t];
        acceptances += chain.acceptances[t];
        if (chain.divergent[t]) ++r.divergences;
    }
    const Vector mean = sum / n;
    for (std::size_t t = burn_in; t < chain.size(); ++t) sq += (chain.positions[t] - mean).cwiseAbs2();
    for (std::size_t i = 0; i < d; ++i) {
        r.means.push_back(mean[static_cast<Eigen::Index>(i)]);
        r.sds.push_back(r.iterations > 1 ? std::sqrt(sq[static_cast<Eigen::Index>(i)] / (n - 1.0)) : 0.0);
    }
    r.rejection_rate = 1.0 - static_cast<double>(acceptances) / static_cast<double>(proposals);
    r.gradient_evals = chain.cumulative_evals.back();

    for (std::size_t i : monitored) {
        std::vector<double> series;
        series.reserve(r.iterations);
        for (std::size_t t = burn_in; t < chain.size(); ++t)
            series.push_back(chain.positions[t][static_cast<Eigen::Index>(i)]);
        try {
            const double tau = integrated_autocorrelation(series);
            r.tau.emplace_back(tau);
            r.ess.emplace_back(std::min(n, n / tau));
        } catch (const std::exception&) {
            r.tau.emplace_back(std::nullopt);
            r.ess.emplace_back(std::nullopt);
        }
    }
    return r;
}

}  // namespace hmc

#endif  // HMC_ANALYSIS_HPP
