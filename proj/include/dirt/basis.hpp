#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstddef>
#include <vector>

namespace dirt {

/// Bounded 1D interval.
struct Interval1D {
    double lo = 0.0;
    double hi = 1.0;
    double length() const { return hi - lo; }
};

/// Counts points clamped back into a domain box; reported once per process.
std::size_t clamp_warning_count();
void note_clamp();

/// Piecewise-linear hat basis on an ordered node set spanning an interval.
/// The basis forms a partition of unity and interpolates node values exactly,
/// so coefficient tensors of function expansions are plain node samples.
class Basis1D {
public:
    Basis1D() = default;
    Basis1D(Interval1D interval, Eigen::VectorXd nodes);

    static Basis1D uniform(Interval1D interval, int n_nodes);

    int size() const { return static_cast<int>(nodes_.size()); }
    int cell_count() const { return size() - 1; }
    const Eigen::VectorXd& nodes() const { return nodes_; }
    const Interval1D& interval() const { return interval_; }

    /// Clamps x to the interval (counting the event) and returns the cell
    /// index j with nodes[j] <= x <= nodes[j+1] plus the local coordinate
    /// t = (x - nodes[j]) / h_j in [0,1].
    void locate(double x, int& cell, double& t) const;

    /// Dense basis vector phi(x); at most two entries are nonzero.
    Eigen::VectorXd eval(double x) const;

    /// Exact tridiagonal mass matrix of the hat functions.
    Eigen::MatrixXd mass_matrix() const;

    /// Lower Cholesky factor of the mass matrix.
    Eigen::MatrixXd mass_cholesky() const;

private:
    Interval1D interval_;
    Eigen::VectorXd nodes_;
};

/// Monotone CDF of the 1D density sum_l (sum_i coeff(i,l) phi_i(x))^2 + offset.
/// The squared hat expansion is piecewise quadratic, so the CDF is piecewise
/// cubic with exact per-cell antiderivatives.
class Cdf1D {
public:
    Cdf1D(const Basis1D& basis, const Eigen::MatrixXd& coeff, double offset = 0.0);

    double mass() const { return mass_; }

    /// Unnormalized density value at x.
    double pdf(double x) const;

    /// Normalized CDF value in [0,1].
    double cdf(double x) const;

    /// x such that cdf(x) = u, via cell bisection plus safeguarded Newton.
    double invert(double u) const;

private:
    const Basis1D* basis_;
    // per-cell quadratic pdf in the local coordinate: q0 + q1 t + q2 t^2
    Eigen::VectorXd q0_, q1_, q2_;
    Eigen::VectorXd cum_; // cumulative cell masses, size cells+1
    double mass_;
};

} // namespace dirt
