#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "dirt/reference.hpp"
#include "dirt/tensor_train.hpp"

namespace dirt {

/// One order-preserving transport layer built from a TT approximation g of a
/// square-root density. The layer represents the normalized density
///   p(x) = (g(x)^2 + gamma) / z
/// together with all conditional CDFs obtained by exact marginalization of
/// the squared TT, and the maps
///   F : domain box -> [0,1]^d   (Rosenblatt transport, F_sharp p = uniform)
///   T = F^{-1} o R : reference box -> domain box   (T_sharp rho = p).
class SirtTransport {
public:
    SirtTransport() = default;

    /// Runs the backward marginalization recursion. gamma is the absolute
    /// defensive constant added to g^2.
    static SirtTransport build(FunctionalTensorTrain tt, ReferenceMeasure reference,
                               double gamma = 0.0);
    /// Same, with gamma = gamma_factor * ||g||_2^2 / volume.
    static SirtTransport build_relative_gamma(FunctionalTensorTrain tt, ReferenceMeasure reference,
                                              double gamma_factor);

    /// Reassembles a layer from serialized parts without re-running the
    /// marginalization recursion, preserving bit-exact stored tensors.
    static SirtTransport from_parts(FunctionalTensorTrain tt, std::vector<TTCore> marginal,
                                    ReferenceMeasure reference, double gamma, double z_tt,
                                    double z_total);

    const FunctionalTensorTrain& tt() const { return tt_; }
    const std::vector<TTCore>& marginal_tensors() const { return marginal_; }
    const ReferenceMeasure& reference() const { return reference_; }
    const Dims& dims() const { return tt_.dims(); }
    int ndim() const { return tt_.ndim(); }
    double gamma() const { return gamma_; }
    double norm_constant() const { return z_total_; }     // z of (g^2 + gamma)
    double tt_norm_constant() const { return z_tt_; }     // ||g||_2^2
    double tail_volume(int k) const { return tail_vol_[k]; } // volume of dims >= k

    // --- density ---
    double logpdf(const Eigen::VectorXd& x) const;
    double pdf(const Eigen::VectorXd& x) const { return std::exp(logpdf(x)); }
    /// log of the unnormalized marginal of g^2 + gamma over the leading
    /// |x_prefix| coordinates (the remaining ones integrated out).
    double log_marginal_unnorm(const Eigen::VectorXd& x_prefix) const;

    // --- Rosenblatt transport to/from the unit cube ---
    Eigen::VectorXd rosenblatt_forward(const Eigen::VectorXd& x) const;
    Eigen::VectorXd rosenblatt_inverse(const Eigen::VectorXd& u) const;

    // --- composed map T = F^{-1} o R and helpers for layered use ---
    Eigen::VectorXd transport(const Eigen::VectorXd& v) const;
    Eigen::VectorXd transport_inverse(const Eigen::VectorXd& x) const;
    /// x_out = T(v); returns logpdf(x_out) - log rho_ref(v), the increment the
    /// layered pullback chain accumulates.
    double push_through(const Eigen::VectorXd& v, Eigen::VectorXd& x_out) const;
    /// log of (T^sharp pi)(v) = log pi(T(v)) + log rho_ref(v) - log p(T(v)).
    double pullback_logpdf(const std::function<double(const Eigen::VectorXd&)>& log_target,
                           const Eigen::VectorXd& v) const;

    // --- conditional machinery (internal order: y block first) ---
    /// Prefix contraction state after consuming the y block once.
    struct YState {
        Eigen::RowVectorXd vec;     // normalized prefix row vector
        double log_scale = 0.0;     // factored-out log norm
        bool dead = false;          // g vanished along the fiber
        Eigen::VectorXd u_y;        // y block mapped to the unit cube
        double log_marginal_y = 0;  // log of unnormalized y-marginal value
    };
    YState push_y(const Eigen::VectorXd& y_internal) const;
    /// Inverts the theta-block CDFs at u in [0,1]^{d_theta} given the prefix.
    Eigen::VectorXd conditional_inverse(const YState& ys, const Eigen::VectorXd& u_theta) const;
    /// Forward theta block; returns the joint logpdf at (y, theta) and
    /// optionally the theta-block cube coordinates.
    double conditional_forward(const YState& ys, const Eigen::VectorXd& theta,
                               Eigen::VectorXd* u_theta = nullptr) const;
    /// log p_Y(y): exact marginal of p over theta.
    double log_marginal_y(const YState& ys) const;

    /// Conditional map theta = T_Theta(T_Y^{-1}(y), R(v_theta)); caches the
    /// prefix of the most recent y per thread.
    Eigen::VectorXd conditional_map(const Eigen::VectorXd& y_internal,
                                    const Eigen::VectorXd& v_theta) const;

private:
    struct Prefix {
        Eigen::RowVectorXd vec;
        double log_scale = 0.0;
        bool dead = false;
    };
    Prefix initial_prefix() const;
    void advance(Prefix& p, int k, double x) const;
    /// Builds the conditional CDF at dim k, maps x_k <-> u_k, returns the log
    /// of the unnormalized marginal value at the evaluated point.
    double step(Prefix& p, int k, bool forward, double& x, double& u) const;

    FunctionalTensorTrain tt_;
    std::vector<TTCore> marginal_;  // B tensors of the backward recursion
    ReferenceMeasure reference_;
    double gamma_ = 0.0;
    double z_tt_ = 0.0;
    double z_total_ = 0.0;
    std::vector<double> tail_vol_;  // size d+1, tail_vol_[d] = 1
};

} // namespace dirt
