#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>

#include "dirt/tensor_train.hpp"

namespace dirt {

/// Controls for the rank-adaptive alternating cross build.
struct CrossConfig {
    int max_rank = 20;
    int init_rank = 4;
    double tolerance = 1e-3;   // relative max error target on validation samples
    int max_sweeps = 8;        // one-directional passes
    int validation_size = 200;
    int enrichment = 2;        // random index columns added per pass while above tolerance
    double rounding_tol = 0.0; // final SVD truncation threshold; 0 drops only numerical zeros
};

/// Batched pointwise oracle in log scale; points are one column per point.
/// Working in logs lets tempered densities pass through without overflow.
using LogBatchOracle = std::function<Eigen::VectorXd(const Eigen::MatrixXd& points)>;

struct CrossResult {
    FunctionalTensorTrain tt;
    long eval_count = 0;       // exact number of oracle point evaluations
    double achieved_error = 0; // relative max error on the last validation batch
    int sweeps_done = 0;
    // tt approximates f * exp(-log_shift); zero whenever folding the scale
    // back into the last core is representable.
    double log_shift = 0.0;
};

/// Alternating-direction cross approximation with maxvol pivot selection and
/// random-index rank enrichment. `init` seeds the interpolation index sets.
CrossResult tt_cross(const LogBatchOracle& log_f, std::vector<Basis1D> bases, Dims dims,
                     const CrossConfig& cfg, std::uint64_t seed,
                     const FunctionalTensorTrain* init = nullptr);

/// Wraps a plain nonnegative-valued oracle for tt_cross.
LogBatchOracle log_oracle_from_values(BatchOracle f);

} // namespace dirt
