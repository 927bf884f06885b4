#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "dirt/rng.hpp"

namespace dirt {

/// Expected outer products of the gradients of log(pi/rho) with respect to
/// the observation and belief blocks; their diagonals and eigenpairs drive
/// variable ordering and rotation.
struct HMatrices {
    enum class Mode { monte_carlo_general, gaussian_closed_form };
    Eigen::MatrixXd h_y;
    Eigen::MatrixXd h_theta;
    Eigen::MatrixXd se_y;      // per-entry Monte Carlo standard errors
    Eigen::MatrixXd se_theta;
    int sample_count = 0;
    Mode mode = Mode::monte_carlo_general;
};

/// Input for the general Monte Carlo estimator: a sampler of the joint law
/// and the gradient of log(pi/rho). Leave grad_log_ratio empty to get the
/// unsupported-operation error.
struct HGeneralInput {
    int d_y = 0;
    int d_theta = 0;
    std::function<void(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                       Eigen::VectorXd& grad_y, Eigen::VectorXd& grad_theta)> grad_log_ratio;
    std::function<void(Rng&, Eigen::VectorXd& y, Eigen::VectorXd& theta)> sample_joint;
};
HMatrices estimate_h_general(const HGeneralInput& input, int n_samples, std::uint64_t seed);

/// Prior-only estimator for the whitened Gaussian case:
///   H_Y = E_prior[(G(t)-G(t0))(G(t)-G(t0))^T],  H_Theta = E_prior[J^T J].
struct HGaussianInput {
    int d_y = 0;
    int d_theta = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& theta)> forward;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd& theta)> jacobian;
    std::function<Eigen::VectorXd(Rng&)> sample_prior;
    Eigen::VectorXd theta0;
};
HMatrices estimate_h_gaussian(const HGaussianInput& input, int n_samples, std::uint64_t seed);

/// Central finite differences for targets without analytic gradients.
std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::VectorXd&)>
fd_grad_log_ratio(std::function<double(const Eigen::VectorXd& y, const Eigen::VectorXd& theta)> log_ratio,
                  double step_scale = 1e-5);

/// Variable reordering / eigen-reparametrization derived from H matrices,
/// with optional dimension truncation and whitening hooks.
struct Preconditioner {
    enum class Strategy { reorder, rotate };
    Strategy strategy = Strategy::reorder;

    std::vector<int> order_y;      // position -> original index (descending diagonal)
    std::vector<int> order_theta;
    Eigen::MatrixXd rotate_y;      // orthogonal; permutation matrix for reorder
    Eigen::MatrixXd rotate_theta;
    Eigen::VectorXd spectrum_y;    // sorted eigenvalues (rotate) or diagonals (reorder)
    Eigen::VectorXd spectrum_theta;
    int n_y = 0;                   // retained dimensions
    int n_theta = 0;
    double tail_bound = 0.0;       // (1/4) (sum tail spectrum_y + sum tail spectrum_theta)

    // whitening applied before the rotation; identity by default
    Eigen::MatrixXd whiten_y, unwhiten_y;
    Eigen::MatrixXd whiten_theta, unwhiten_theta;
    Eigen::VectorXd shift_y, shift_theta;

    Eigen::VectorXd apply_y(const Eigen::VectorXd& y) const;
    Eigen::VectorXd unapply_y(const Eigen::VectorXd& y_reduced) const;
    Eigen::VectorXd apply_theta(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd unapply_theta(const Eigen::VectorXd& theta_reduced) const;

    int full_d_y() const { return static_cast<int>(rotate_y.rows()); }
    int full_d_theta() const { return static_cast<int>(rotate_theta.rows()); }

    /// Tail bound value at other retained sizes (monotonicity checks).
    double bound_at(int ny, int ntheta) const;
};

/// Selection of retained dimensions: fixed sizes win when positive, otherwise
/// the smallest n with tail spectrum sum <= energy_threshold * trace.
struct PrecondSelection {
    int n_y = 0;
    int n_theta = 0;
    double energy_threshold = 0.0;
};

Preconditioner build_preconditioner(const HMatrices& h, Preconditioner::Strategy strategy,
                                    const PrecondSelection& sel);

} // namespace dirt
