#include "dirt/reference.hpp"

#include <cmath>

#include "dirt/errors.hpp"
#include "dirt/stats.hpp"

namespace dirt {

ReferenceMeasure::ReferenceMeasure(Kind kind, int dim, double bound)
    : kind_(kind), dim_(dim), bound_(bound) {
    if (dim_ < 1) throw DomainError("ReferenceMeasure: dim must be >= 1");
    if (kind_ == Kind::truncated_gaussian) {
        if (!(bound_ > 0.0)) throw DomainError("ReferenceMeasure: bound must be positive");
        tail_lo_ = normal_cdf(-bound_);
        tail_mass_ = normal_cdf(bound_) - tail_lo_;
    }
}

Interval1D ReferenceMeasure::interval() const {
    if (kind_ == Kind::uniform01) return {0.0, 1.0};
    return {-bound_, bound_};
}

double ReferenceMeasure::cdf1(double x) const {
    if (kind_ == Kind::uniform01) return std::min(1.0, std::max(0.0, x));
    if (x <= -bound_) return 0.0;
    if (x >= bound_) return 1.0;
    return (normal_cdf(x) - tail_lo_) / tail_mass_;
}

double ReferenceMeasure::invcdf1(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("ReferenceMeasure: u outside [0,1]");
    if (kind_ == Kind::uniform01) return u;
    if (u <= 0.0) return -bound_;
    if (u >= 1.0) return bound_;
    const double x = normal_quantile(tail_lo_ + u * tail_mass_);
    return std::min(bound_, std::max(-bound_, x));
}

double ReferenceMeasure::logpdf1(double x) const {
    if (kind_ == Kind::uniform01) return 0.0;
    return normal_logpdf(x) - std::log(tail_mass_);
}

double ReferenceMeasure::logpdf(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += logpdf1(x[i]);
    return s;
}

Eigen::VectorXd ReferenceMeasure::to_uniform(const Eigen::VectorXd& x) const {
    Eigen::VectorXd u(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = cdf1(x[i]);
    return u;
}

Eigen::VectorXd ReferenceMeasure::from_uniform(const Eigen::VectorXd& u) const {
    Eigen::VectorXd x(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) x[i] = invcdf1(u[i]);
    return x;
}

Eigen::VectorXd ReferenceMeasure::sample(Rng& rng) const {
    Eigen::VectorXd x(dim_);
    for (int i = 0; i < dim_; ++i) x[i] = invcdf1(uniform01(rng));
    return x;
}

} // namespace dirt
