#pragma once

#include <Eigen/Core>

namespace dirt {

/// Sample-based Hellinger estimate on the [0,1] scale, with a delta-method
/// standard error. Flagged unreliable when the importance weights collapse.
struct HellingerEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int n = 0;
    double ess = 0.0;
    bool reliable = true;
};

/// Self-normalized estimator from samples x_i ~ p:
///   w_i = pi*(x_i) / p(x_i),  D^2 = 1 - mean(sqrt(w)) / sqrt(mean(w)).
/// Both log vectors may be unnormalized; the estimate is shift-invariant.
HellingerEstimate hellinger_from_samples(const Eigen::VectorXd& log_p,
                                         const Eigen::VectorXd& log_pi_unnorm);

/// Effective sample size (sum w)^2 / sum w^2 from log weights; in [1, n].
double ess(const Eigen::VectorXd& log_weights);

/// Multiplier of Markov-type expectation error bounds:
///   4 eps / (sqrt(2) delta - 4 eps), valid for eps < sqrt(2)/4, delta > 2 sqrt(2) eps.
double expectation_error_bound(double eps, double delta);

} // namespace dirt
