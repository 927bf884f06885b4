#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace dirt {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

/// Embedded Dormand-Prince 5(4) integrator with PI step control.
/// atol defaults to rtol * 1e-2 when negative.
Eigen::VectorXd dopri5_integrate(const OdeRhs& rhs, Eigen::VectorXd y0, double t0, double t1,
                                 double rtol, double atol = -1.0);

/// Integrates once over [t0, times.back()], recording the state at each
/// requested time (strictly increasing, all > t0).
Eigen::MatrixXd dopri5_at_times(const OdeRhs& rhs, Eigen::VectorXd y0, double t0,
                                const std::vector<double>& times, double rtol, double atol = -1.0);

} // namespace dirt
