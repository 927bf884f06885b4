#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dirt/cross.hpp"
#include "dirt/diagnostics.hpp"
#include "dirt/precondition.hpp"
#include "dirt/sirt.hpp"

namespace dirt {

/// Internal <-> external coordinate permutation. Internally the transport
/// stores [y_{d_y}, ..., y_1, theta_1, ..., theta_{d_theta}]; the permutation
/// is an involution, so it converts both ways.
std::vector<int> block_permutation(const Dims& dims);
Eigen::VectorXd permute_coords(const Eigen::VectorXd& x, const std::vector<int>& perm);

/// Callable view of a joint target: batched log phi = log(pi/rho) and
/// log rho on external (y, theta) coordinates, plus the domain boxes.
struct BridgingTarget {
    Dims dims;
    std::vector<Interval1D> y_box;
    std::vector<Interval1D> theta_box;
    std::function<void(const Eigen::MatrixXd& pts, Eigen::VectorXd& log_phi,
                       Eigen::VectorXd& log_rho)> eval;
};

/// Rewrites a target in preconditioned coordinates (permuted or rotated and
/// possibly truncated); reduced boxes must be supplied for rotations.
BridgingTarget reduce_target(const BridgingTarget& full, const Preconditioner& p,
                             const std::vector<Interval1D>& y_box_reduced,
                             const std::vector<Interval1D>& theta_box_reduced);

/// Temperature ladder of the bridging densities pi^l ~ phi^{beta_l} rho.
struct TemperingSchedule {
    enum class Kind { geometric, uniform, adaptive };
    Kind kind = Kind::geometric;
    double beta0 = 1e-4;   // geometric / adaptive start
    double ratio = 3.1622776601683795; // sqrt(10)
    int levels = 4;        // uniform: number of layers
    double eta = 0.3;      // adaptive per-step Hellinger target
    int n_adapt_samples = 10000;

    void validate() const;
    /// Fully determined ladders (geometric/uniform); empty for adaptive.
    std::vector<double> ladder() const;
};

struct LayerLog {
    double beta = 0.0;
    long cross_evals = 0;
    long diag_evals = 0;
    long adapt_evals = 0;
    double achieved_error = 0.0;
    std::vector<int> ranks;
    HellingerEstimate hellinger; // estimated D_H(p^l, pi^l)
    double wall_ms = 0.0;
    int sweeps = 0;
};

struct DirtBuildOptions {
    CrossConfig cross;
    std::vector<int> grid_layer0; // nodes per internal dim; single entry broadcasts
    int ref_grid = 33;            // nodes per dim on the reference box (layers >= 1)
    double gamma_factor = 1e-8;   // relative defensive constant per layer
    int diag_samples = 1000;      // per-layer Hellinger diagnostic draws (0 = off)
    std::uint64_t seed = 1;
    int max_layers = 100;
};

/// Deep composition of SIRT layers over tempered bridging densities, built
/// greedily; the result maps the reference product measure to an
/// approximation of the target joint density.
class DirtTransport {
public:
    DirtTransport() = default;

    static DirtTransport build(const BridgingTarget& target, const ReferenceMeasure& reference,
                               const TemperingSchedule& schedule, const DirtBuildOptions& opts,
                               std::optional<Preconditioner> precond = std::nullopt);

    const std::vector<SirtTransport>& layers() const { return layers_; }
    const std::vector<double>& betas() const { return betas_; }
    const ReferenceMeasure& reference() const { return reference_; }
    const std::optional<Preconditioner>& precond() const { return precond_; }
    const std::vector<LayerLog>& build_log() const { return log_; }
    const Dims& dims() const { return layers_.front().dims(); }
    int ndim() const { return layers_.front().ndim(); }
    long total_evals() const;

    // --- maps on internal coordinates ---
    Eigen::VectorXd forward(const Eigen::VectorXd& u_ref) const;
    Eigen::VectorXd inverse(const Eigen::VectorXd& x_internal) const;
    double logpdf_internal(const Eigen::VectorXd& x_internal) const;
    /// x = T_L(u); returns log p(x) of the pushforward density.
    double forward_with_logpdf(const Eigen::VectorXd& u_ref, Eigen::VectorXd& x_out) const;

    // --- external-order conveniences (coordinates of the build target) ---
    double logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& theta) const;
    void sample_joint(Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& theta) const;

    // --- conditioning ---
    /// Caches the per-layer observation prefixes for one y (given in the
    /// transport's own observation space, i.e. after any preconditioning).
    struct ConditionalContext {
        std::vector<SirtTransport::YState> states;
        double log_marginal_y = 0.0; // log p_Y(y)
    };
    ConditionalContext condition(const Eigen::VectorXd& y) const;
    /// theta = T_{Theta | Y=y}(v) with v in the reference box (theta block).
    Eigen::VectorXd sample_conditional(const ConditionalContext& ctx,
                                       const Eigen::VectorXd& v_theta) const;
    /// log p(theta | y) under the transport, exact via the marginal chain.
    double conditional_logpdf(const ConditionalContext& ctx, const Eigen::VectorXd& theta) const;

    /// Applies the stored preconditioner to raw observations (identity when
    /// none); the result lives in the transport's observation space.
    Eigen::VectorXd observation_to_transport_space(const Eigen::VectorXd& y_raw) const;
    /// Lifts a sampled theta back to the original belief space.
    Eigen::VectorXd lift_theta(const Eigen::VectorXd& theta) const;

    // --- serialization (little-endian binary, magic "DIRT") ---
    void save(const std::string& path) const;
    static DirtTransport load(const std::string& path);

    /// Assembles a transport from deserialized parts; layers must already be
    /// consistent.
    static DirtTransport from_parts(std::vector<SirtTransport> layers, std::vector<double> betas,
                                    ReferenceMeasure reference, std::optional<Preconditioner> precond,
                                    std::vector<LayerLog> log);

private:
    std::vector<SirtTransport> layers_;
    std::vector<double> betas_;
    ReferenceMeasure reference_;
    std::optional<Preconditioner> precond_;
    std::vector<LayerLog> log_;
};

/// Counted, internally-ordered oracle wrapper shared by the builder and the
/// adaptive temperature search.
class CountedTarget {
public:
    CountedTarget(const BridgingTarget& target, std::vector<int> perm);
    /// Points in internal order; outputs aligned with columns.
    void eval_internal(const Eigen::MatrixXd& pts, Eigen::VectorXd& log_phi,
                       Eigen::VectorXd& log_rho) const;
    long count() const { return count_.load(); }

private:
    const BridgingTarget* target_;
    std::vector<int> perm_;
    mutable std::atomic<long> count_{0};
};

/// One step of the adaptive temperature selection: draws n samples from the
/// current composition, then bisects the increment so the estimated Hellinger
/// distance between adjacent bridges matches eta. Returns min(beta + delta, 1).
double next_beta_adaptive(const std::vector<SirtTransport>& layers_so_far,
                          const CountedTarget& target, const ReferenceMeasure& reference,
                          double beta, double eta, int n_samples, std::uint64_t seed);

/// The estimator behind the adaptive selection, exposed for validation:
/// given F_i = log phi(x_i) and self-normalized log weights W_i at samples
/// from the current approximation of pi^l, estimates D_H(pi^l, pi^{l+dbeta}).
double tempering_gap_estimate(const Eigen::VectorXd& log_phi, const Eigen::VectorXd& log_w,
                              double dbeta);

} // namespace dirt
