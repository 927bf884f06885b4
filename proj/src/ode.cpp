#include "dirt/ode.hpp"

#include <cmath>

#include "dirt/errors.hpp"

namespace dirt {

namespace {

// Dormand-Prince 5(4) tableau (FSAL).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

struct Stepper {
    const OdeRhs& rhs;
    double rtol, atol;
    Eigen::VectorXd k1, k2, k3, k4, k5, k6, k7, ytmp;
    double err_prev = 1.0;

    explicit Stepper(const OdeRhs& f, double rt, double at) : rhs(f), rtol(rt), atol(at) {}

    // One attempted step from (t, y) with size h; on acceptance updates y and
    // returns true. k1 must hold rhs(t, y) on entry (FSAL).
    bool try_step(double t, Eigen::VectorXd& y, double h, double& err_out) {
        ytmp = y + h * (a21 * k1);
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ytmp, k6);
        Eigen::VectorXd ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + h, ynew, k7);
        const Eigen::VectorXd errv =
            h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double q = errv[i] / sc;
            acc += q * q;
        }
        err_out = std::sqrt(acc / y.size());
        if (err_out <= 1.0) {
            y = std::move(ynew);
            k1 = k7; // FSAL
            return true;
        }
        return false;
    }

    double next_h(double h, double err) const {
        const double safe = 0.9;
        double fac = safe * std::pow(std::max(err, 1e-10), -0.17) * std::pow(err_prev, 0.04);
        fac = std::min(5.0, std::max(0.2, fac));
        return h * fac;
    }
};

} // namespace

Eigen::MatrixXd dopri5_at_times(const OdeRhs& rhs, Eigen::VectorXd y0, double t0,
                                const std::vector<double>& times, double rtol, double atol) {
    if (atol < 0.0) atol = rtol * 1e-2;
    if (times.empty()) return Eigen::MatrixXd(y0.size(), 0);
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] <= (i == 0 ? t0 : times[i - 1]))
            throw DomainError("dopri5: times must be strictly increasing past t0");

    Eigen::MatrixXd out(y0.size(), static_cast<Eigen::Index>(times.size()));
    Stepper st(rhs, rtol, atol);
    st.rhs(t0, y0, st.k1);
    double t = t0;
    double h = (times.back() - t0) / 100.0;
    const double h_min = 1e-14 * (times.back() - t0);
    std::size_t next = 0;
    while (next < times.size()) {
        bool hit = false;
        if (t + h >= times[next]) {
            h = times[next] - t;
            hit = true;
        }
        double err;
        if (st.try_step(t, y0, h, err)) {
            t = hit ? times[next] : t + h;
            if (hit) out.col(static_cast<Eigen::Index>(next++)) = y0;
            const double grow = st.next_h(h, err);
            st.err_prev = std::max(err, 1e-10);
            h = grow;
        } else {
            h = st.next_h(h, err);
        }
        if (h < h_min) throw BuildError("dopri5: step-size underflow");
    }
    return out;
}

Eigen::VectorXd dopri5_integrate(const OdeRhs& rhs, Eigen::VectorXd y0, double t0, double t1,
                                 double rtol, double atol) {
    return dopri5_at_times(rhs, std::move(y0), t0, {t1}, rtol, atol).col(0);
}

} // namespace dirt
