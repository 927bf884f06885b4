#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "dirt/dirt.hpp"
#include "dirt/precondition.hpp"

namespace dirt {

/// Callable joint density with its registered product-form reference, the
/// variable partition, and optional gradients/samplers for oracles.
struct TargetDensity {
    Dims dims;
    std::vector<Interval1D> y_box;
    std::vector<Interval1D> theta_box;
    std::function<double(const Eigen::VectorXd& y, const Eigen::VectorXd& theta)> log_joint;
    std::function<double(const Eigen::VectorXd& y, const Eigen::VectorXd& theta)> log_rho;
    std::function<void(const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                       Eigen::VectorXd& grad_y, Eigen::VectorXd& grad_theta)> grad_log_ratio;
    std::function<void(Rng&, Eigen::VectorXd& y, Eigen::VectorXd& theta)> sample_joint;

    double log_ratio(const Eigen::VectorXd& y, const Eigen::VectorXd& theta) const {
        return log_joint(y, theta) - log_rho(y, theta);
    }
    /// Batched adapter consumed by the DIRT builder.
    BridgingTarget bridging() const;
    /// Monte Carlo estimator inputs.
    HGeneralInput h_general_input(bool fd_fallback = false) const;
};

// ---------------------------------------------------------------------------
// SIR epidemic inference

struct SirModel {
    double s0 = 99.0, i0 = 1.0, r0 = 0.0;
    std::vector<double> obs_times{1.25, 2.5, 3.75, 5.0};
    double noise_std = 1.0;
    Interval1D theta_box{0.0, 2.0};
    Interval1D y_box{0.0, 100.0};
    double ode_rtol = 1e-6;

    /// Infected counts at the observation times for rates (beta, gamma).
    Eigen::VectorXd infected_at_times(double beta, double gamma) const;
    /// Full (S, I, R) trajectory at the observation times.
    Eigen::MatrixXd trajectory(double beta, double gamma) const;
};

/// Joint density of 4 noisy infected counts and the two rates under the
/// uniform prior on [0,2]^2; reference centered at the prior-mean trajectory.
TargetDensity sir_target(const SirModel& model = {});

// ---------------------------------------------------------------------------
// Whitened linear-Gaussian benchmark with closed-form posterior

struct LinearGaussianModel {
    Eigen::MatrixXd g;       // d_y x d_theta forward matrix (whitened)
    Eigen::VectorXd theta0;  // prior mean (whitened)

    static LinearGaussianModel random(int d_y, int d_theta, double scale, std::uint64_t seed);
    /// Whitens a problem with prior N(theta0_hat, prior_cov) and noise
    /// N(0, noise_cov) into the unit-covariance form.
    static LinearGaussianModel whitened(const Eigen::MatrixXd& g_hat,
                                        const Eigen::VectorXd& theta0_hat,
                                        const Eigen::MatrixXd& prior_cov,
                                        const Eigen::MatrixXd& noise_cov);

    int d_y() const { return static_cast<int>(g.rows()); }
    int d_theta() const { return static_cast<int>(g.cols()); }
    Eigen::MatrixXd posterior_cov() const;
    Eigen::VectorXd posterior_mean(const Eigen::VectorXd& y) const;
    Eigen::MatrixXd h_y_exact() const { return g * g.transpose(); }
    Eigen::MatrixXd h_theta_exact() const { return g.transpose() * g; }
    void sample_joint(Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& theta) const;
    HGaussianInput h_gaussian_input() const;
};

TargetDensity linear_gaussian_target(const LinearGaussianModel& model);

// ---------------------------------------------------------------------------
// 1D diffusion with Haar-wavelet log-coefficient and Laplace prior

struct Diffusion1DModel {
    int n_theta = 16;          // power of two: constant + Haar levels
    double gamma_laplace = 1.0;
    int n_obs = 8;
    int cells = 64;
    double snr = 5.0;
    double decay = 2.0;        // level-dependent scaling 2^{-decay * j}

    double log_kappa(const Eigen::VectorXd& theta, double x) const;
    /// Second-order finite-difference solve of -(kappa u')' = 1, u(0)=u(1)=0.
    Eigen::VectorXd solve(const Eigen::VectorXd& theta, int n_cells) const;
    /// Solution at the observation points (default grid).
    Eigen::VectorXd observe(const Eigen::VectorXd& theta) const;
    std::vector<double> obs_points() const;
    double noise_std() const;  // RMS of the theta = 0 observations over snr
};

TargetDensity diffusion1d_target(const Diffusion1DModel& model = {});

// ---------------------------------------------------------------------------
// Concentrated curved density for layering tests (belief block only)

struct BananaModel {
    double sigma = 0.3;
    Interval1D box1{-5.0, 5.0};
    Interval1D box2{-1.0 - 6.0 * 0.3, 24.0 + 6.0 * 0.3};
};

TargetDensity banana_target(double sigma = 0.3);

/// Two-dimensional target with log ratio bounded on a box; used for
/// tempering-gap scaling checks.
TargetDensity bounded_ratio_target(double strength = 2.0);

/// Gaussian toy with all coupling carried by one (y, theta) coordinate pair;
/// every other coordinate matches the reference exactly.
TargetDensity coupled_pair_target(int d_y, int d_theta, int y_hot, int theta_hot, double corr);

} // namespace dirt
