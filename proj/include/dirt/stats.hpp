#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dirt/errors.hpp"

namespace dirt {

/// Standard normal cdf.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal log pdf.
inline double normal_logpdf(double x) { return -0.5 * x * x - 0.9189385332046727417803297; }

/// Inverse of the standard normal cdf (Wichura's AS 241, double precision).
double normal_quantile(double p);

/// log(sum(exp(v))) with a single max shift.
inline double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m; // all -inf (or a nan propagates)
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against U[0,1].
inline double ks_statistic_uniform(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(u[i] - lo, hi - u[i]));
    }
    return d;
}

/// Asymptotic KS critical value; alpha must be one of 0.01, 0.05.
inline double ks_critical(std::size_t n, double alpha) {
    double c;
    if (alpha == 0.01) c = 1.62762;
    else if (alpha == 0.05) c = 1.35810;
    else throw DomainError("ks_critical: unsupported alpha");
    return c / std::sqrt(static_cast<double>(n));
}

/// Chi-square quantile at probability 0.99 for 99 degrees of freedom
/// (10x10 uniformity bins).
inline constexpr double chi2_99dof_crit_99() { return 134.6416; }

} // namespace dirt
