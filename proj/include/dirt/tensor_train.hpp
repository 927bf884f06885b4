#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "dirt/basis.hpp"

namespace dirt {

/// Observation/belief split of the coordinates. Internally the transport
/// orders dimensions as [y_{d_y}, ..., y_1, theta_1, ..., theta_{d_theta}],
/// so the whole observation block forms the leading prefix.
struct Dims {
    int d_y = 0;
    int d_theta = 0;
    int total() const { return d_y + d_theta; }
};

/// One TT core: a stack of n matrix slices of shape r_left x r_right.
struct TTCore {
    std::vector<Eigen::MatrixXd> slice;

    int r_left() const { return slice.empty() ? 0 : static_cast<int>(slice[0].rows()); }
    int r_right() const { return slice.empty() ? 0 : static_cast<int>(slice[0].cols()); }
    int n() const { return static_cast<int>(slice.size()); }

    /// (r_left * n) x r_right matrix; row index is alpha + r_left * i.
    Eigen::MatrixXd left_unfold() const;
    /// r_left x (n * r_right) matrix; column index is i * r_right + beta.
    Eigen::MatrixXd right_unfold() const;

    static TTCore from_left_unfold(const Eigen::MatrixXd& m, int r_left, int n);
    static TTCore from_right_unfold(const Eigen::MatrixXd& m, int n, int r_right);

    /// Matrix-valued core evaluation: (1-t) * slice[cell] + t * slice[cell+1].
    Eigen::MatrixXd at(const Basis1D& basis, double x) const;
};

/// Basis-expanded tensor train representing a function on a product of
/// bounded intervals; coefficients are node values of the hat bases.
class FunctionalTensorTrain {
public:
    FunctionalTensorTrain() = default;
    FunctionalTensorTrain(std::vector<TTCore> cores, std::vector<Basis1D> bases, Dims dims);

    int ndim() const { return static_cast<int>(cores_.size()); }
    const Dims& dims() const { return dims_; }
    const std::vector<TTCore>& cores() const { return cores_; }
    std::vector<TTCore>& cores() { return cores_; }
    const std::vector<Basis1D>& bases() const { return bases_; }
    const Basis1D& basis(int k) const { return bases_[k]; }

    /// Rank vector (ndim + 1 entries, first and last equal to 1).
    std::vector<int> ranks() const;
    int max_rank() const;

    /// Volume of the tensor-product domain box.
    double domain_volume() const;

    /// Chained core product at a point; O(d r^2).
    double eval(const Eigen::VectorXd& x) const;

    /// Checks shape chaining and finiteness; throws on violation.
    void validate() const;

private:
    std::vector<TTCore> cores_;
    std::vector<Basis1D> bases_;
    Dims dims_;
};

/// SVD-based rank truncation. Keeps singular values above
/// rel_tol * sigma_max per bond (plus an absolute floor near machine eps).
void tt_round(FunctionalTensorTrain& tt, double rel_tol);

/// Nested interpolation index sets derived from an existing TT without any
/// oracle calls; used to warm-start cross on a related target.
struct CrossIndexSets {
    // left_sets[k]: multi-indices over dims 0..k, one per left rank at bond k
    std::vector<std::vector<std::vector<int>>> left_sets;
    // right_sets[k]: multi-indices over dims k+1..d-1
    std::vector<std::vector<std::vector<int>>> right_sets;
};
CrossIndexSets index_sets_from_tt(const FunctionalTensorTrain& tt);

/// Greedy max-volume square submatrix selection on a tall matrix with
/// orthonormal-ish columns; returns the selected row indices.
std::vector<int> maxvol(const Eigen::MatrixXd& q, double tol = 1.01, int max_iters = 200);

/// Monte Carlo estimate of ||f - g||_2 over the uniform measure on the
/// domain box, with its standard error. The oracle returns plain values.
struct L2Estimate {
    double value = 0.0;
    double std_error = 0.0;
};
using BatchOracle = std::function<Eigen::VectorXd(const Eigen::MatrixXd& points)>;
L2Estimate l2_error_estimate(const FunctionalTensorTrain& tt, const BatchOracle& f,
                             int n_samples, std::uint64_t seed);

} // namespace dirt
