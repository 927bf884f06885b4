#include "dirt/diagnostics.hpp"

#include <cmath>

#include "dirt/errors.hpp"
#include "dirt/stats.hpp"

namespace dirt {

HellingerEstimate hellinger_from_samples(const Eigen::VectorXd& log_p,
                                         const Eigen::VectorXd& log_pi_unnorm) {
    if (log_p.size() != log_pi_unnorm.size() || log_p.size() < 2)
        throw DomainError("hellinger_from_samples: need matching sample vectors");
    const Eigen::Index n = log_p.size();
    Eigen::VectorXd lw = log_pi_unnorm - log_p;
    const double m = lw.maxCoeff();
    if (!std::isfinite(m)) throw DomainError("hellinger_from_samples: degenerate log weights");

    double sa = 0.0, sb = 0.0;
    Eigen::VectorXd a(n), b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = lw[i] - m;
        a[i] = std::exp(0.5 * s);
        b[i] = std::exp(s);
        sa += a[i];
        sb += b[i];
    }
    const double ma = sa / n, mb = sb / n;
    double caa = 0.0, cbb = 0.0, cab = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        caa += (a[i] - ma) * (a[i] - ma);
        cbb += (b[i] - mb) * (b[i] - mb);
        cab += (a[i] - ma) * (b[i] - mb);
    }
    const double denom = n > 1 ? (n - 1.0) : 1.0;
    caa /= denom; cbb /= denom; cab /= denom;

    const double bc = ma / std::sqrt(mb); // Bhattacharyya coefficient estimate
    const double d2 = std::max(0.0, 1.0 - bc);

    // delta method on g(A,B) = 1 - A / sqrt(B)
    const double gA = -1.0 / std::sqrt(mb);
    const double gB = 0.5 * ma / (mb * std::sqrt(mb));
    const double var_d2 = std::max(0.0, (gA * gA * caa + 2.0 * gA * gB * cab + gB * gB * cbb) / n);
    const double se_d2 = std::sqrt(var_d2);

    HellingerEstimate est;
    est.n = static_cast<int>(n);
    est.value = std::sqrt(d2);
    est.std_error = est.value > 1e-8 ? se_d2 / (2.0 * est.value) : std::sqrt(se_d2);
    est.ess = ess(lw);
    est.reliable = est.ess >= 10.0;
    return est;
}

double ess(const Eigen::VectorXd& log_weights) {
    const double l1 = log_sum_exp(log_weights);
    const double l2 = log_sum_exp(2.0 * log_weights);
    return std::exp(2.0 * l1 - l2);
}

double expectation_error_bound(double eps, double delta) {
    const double rt2 = std::sqrt(2.0);
    if (!(eps >= 0.0 && eps < rt2 / 4.0))
        throw DomainError("expectation_error_bound: need 0 <= eps < sqrt(2)/4");
    if (!(delta > 2.0 * rt2 * eps))
        throw DomainError("expectation_error_bound: need delta > 2 sqrt(2) eps");
    return 4.0 * eps / (rt2 * delta - 4.0 * eps);
}

} // namespace dirt
