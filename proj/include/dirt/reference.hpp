#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "dirt/basis.hpp"
#include "dirt/rng.hpp"

namespace dirt {

/// Product-form reference measure with closed-form per-dimension CDFs.
/// uniform01 lives on [0,1]^d; truncated_gaussian is a standard normal
/// truncated to [-bound, bound]^d.
class ReferenceMeasure {
public:
    enum class Kind { uniform01, truncated_gaussian };

    ReferenceMeasure() = default;
    ReferenceMeasure(Kind kind, int dim, double bound = 3.0);

    static ReferenceMeasure uniform(int dim) { return ReferenceMeasure(Kind::uniform01, dim); }
    static ReferenceMeasure truncated_gaussian(int dim, double bound) {
        return ReferenceMeasure(Kind::truncated_gaussian, dim, bound);
    }

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double bound() const { return bound_; }
    Interval1D interval() const;

    double cdf1(double x) const;      // strictly increasing on the interval
    double invcdf1(double u) const;
    double logpdf1(double x) const;

    double logpdf(const Eigen::VectorXd& x) const;
    /// Maps reference coordinates to the unit cube, per dimension.
    Eigen::VectorXd to_uniform(const Eigen::VectorXd& x) const;
    Eigen::VectorXd from_uniform(const Eigen::VectorXd& u) const;

    Eigen::VectorXd sample(Rng& rng) const;

private:
    Kind kind_ = Kind::uniform01;
    int dim_ = 0;
    double bound_ = 3.0;
    double tail_lo_ = 0.0;  // Phi(-bound)
    double tail_mass_ = 1.0; // Phi(bound) - Phi(-bound)
};

} // namespace dirt
