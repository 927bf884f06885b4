#pragma once

#include <vector>

#include "dirt/diagnostics.hpp"
#include "dirt/dirt.hpp"
#include "dirt/models.hpp"

namespace dirt {

/// Per-observation conditional accuracy: for each y, samples the transport's
/// conditional and estimates D_H(pi_{Theta|Y=y}, p_{Theta|Y=y}) against the
/// unnormalized exact conditional.
struct ConditionalErrorResult {
    std::vector<HellingerEstimate> per_y;
    double q25 = 0.0, median = 0.0, q75 = 0.0;
    double mean = 0.0;
    double pooled_se = 0.0;
};

ConditionalErrorResult conditional_error_histogram(const DirtTransport& transport,
                                                   const TargetDensity& target,
                                                   const std::vector<Eigen::VectorXd>& y_values,
                                                   int n_per_y, std::uint64_t seed);

/// Single-observation version; also returns the drawn belief samples when
/// requested (in the original belief space).
HellingerEstimate conditional_hellinger(const DirtTransport& transport, const TargetDensity& target,
                                        const Eigen::VectorXd& y, int n_samples, std::uint64_t seed,
                                        Eigen::MatrixXd* samples_out = nullptr,
                                        Eigen::VectorXd* logp_out = nullptr);

/// Joint-density accuracy of the transport against the target, estimated from
/// transport samples.
HellingerEstimate joint_hellinger(const DirtTransport& transport, const TargetDensity& target,
                                  int n_samples, std::uint64_t seed);

} // namespace dirt
