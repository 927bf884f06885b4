#include "dirt/models.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "dirt/errors.hpp"
#include "dirt/ode.hpp"
#include "dirt/parallel.hpp"
#include "dirt/stats.hpp"

namespace dirt {

BridgingTarget TargetDensity::bridging() const {
    BridgingTarget b;
    b.dims = dims;
    b.y_box = y_box;
    b.theta_box = theta_box;
    const TargetDensity self = *this; // value capture keeps the target alive
    b.eval = [self](const Eigen::MatrixXd& pts, Eigen::VectorXd& lphi, Eigen::VectorXd& lrho) {
        const Eigen::Index m = pts.cols();
        lphi.resize(m);
        lrho.resize(m);
        parallel_for(static_cast<std::size_t>(m), [&](std::size_t c) {
            const Eigen::VectorXd y = pts.col(static_cast<Eigen::Index>(c)).head(self.dims.d_y);
            const Eigen::VectorXd th = pts.col(static_cast<Eigen::Index>(c)).tail(self.dims.d_theta);
            const double lr = self.log_rho(y, th);
            lrho[static_cast<Eigen::Index>(c)] = lr;
            lphi[static_cast<Eigen::Index>(c)] = self.log_joint(y, th) - lr;
        });
    };
    return b;
}

HGeneralInput TargetDensity::h_general_input(bool fd_fallback) const {
    HGeneralInput in;
    in.d_y = dims.d_y;
    in.d_theta = dims.d_theta;
    in.sample_joint = sample_joint;
    if (grad_log_ratio) {
        in.grad_log_ratio = grad_log_ratio;
    } else if (fd_fallback) {
        const TargetDensity self = *this;
        in.grad_log_ratio = fd_grad_log_ratio(
            [self](const Eigen::VectorXd& y, const Eigen::VectorXd& th) {
                return self.log_ratio(y, th);
            });
    }
    return in;
}

// ---------------------------------------------------------------------------
// SIR

Eigen::MatrixXd SirModel::trajectory(double beta, double gamma) const {
    Eigen::VectorXd y0(3);
    y0 << s0, i0, r0;
    auto rhs = [beta, gamma](double, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
        ds.resize(3);
        const double infection = beta * s[0] * s[1];
        ds[0] = -infection;
        ds[1] = infection - gamma * s[1];
        ds[2] = gamma * s[1];
    };
    return dopri5_at_times(rhs, y0, 0.0, obs_times, ode_rtol);
}

Eigen::VectorXd SirModel::infected_at_times(double beta, double gamma) const {
    if (!(beta >= theta_box.lo && beta <= theta_box.hi && gamma >= theta_box.lo &&
          gamma <= theta_box.hi))
        throw DomainError("SirModel: rates outside the prior box");
    return trajectory(beta, gamma).row(1).transpose();
}

TargetDensity sir_target(const SirModel& model) {
    TargetDensity t;
    t.dims = {static_cast<int>(model.obs_times.size()), 2};
    t.y_box.assign(t.dims.d_y, model.y_box);
    t.theta_box.assign(2, model.theta_box);

    const Eigen::VectorXd ref_traj = model.infected_at_times(1.0, 1.0); // prior mean rates
    const double sd = model.noise_std;
    const double log_prior = -2.0 * std::log(model.theta_box.length());

    t.log_joint = [model, sd, log_prior](const Eigen::VectorXd& y, const Eigen::VectorXd& th) {
        const Eigen::VectorXd mu = model.infected_at_times(th[0], th[1]);
        double s = log_prior;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            s += normal_logpdf((y[i] - mu[i]) / sd) - std::log(sd);
        return s;
    };
    t.log_rho = [ref_traj, sd, log_prior](const Eigen::VectorXd& y, const Eigen::VectorXd&) {
        double s = log_prior;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            s += normal_logpdf((y[i] - ref_traj[i]) / sd) - std::log(sd);
        return s;
    };
    t.sample_joint = [model, sd](Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& th) {
        std::uniform_real_distribution<double> prior(model.theta_box.lo, model.theta_box.hi);
        std::normal_distribution<double> noise(0.0, sd);
        th.resize(2);
        th << prior(rng), prior(rng);
        const Eigen::VectorXd mu = model.infected_at_times(th[0], th[1]);
        y.resize(mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i) y[i] = mu[i] + noise(rng);
    };
    return t;
}

// ---------------------------------------------------------------------------
// Linear-Gaussian

LinearGaussianModel LinearGaussianModel::random(int d_y, int d_theta, double scale,
                                                std::uint64_t seed) {
    auto rng = make_rng(seed, 0x11f6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    LinearGaussianModel m;
    m.g.resize(d_y, d_theta);
    for (int i = 0; i < d_y; ++i)
        for (int j = 0; j < d_theta; ++j) m.g(i, j) = scale * gauss(rng);
    m.theta0 = Eigen::VectorXd::Zero(d_theta);
    return m;
}

LinearGaussianModel LinearGaussianModel::whitened(const Eigen::MatrixXd& g_hat,
                                                  const Eigen::VectorXd& theta0_hat,
                                                  const Eigen::MatrixXd& prior_cov,
                                                  const Eigen::MatrixXd& noise_cov) {
    auto inv_sqrt = [](const Eigen::MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
            throw DomainError("whitening: covariance must be positive definite");
        return Eigen::MatrixXd(es.operatorInverseSqrt());
    };
    auto sqrt_m = [](const Eigen::MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        return Eigen::MatrixXd(es.operatorSqrt());
    };
    LinearGaussianModel m;
    m.g = inv_sqrt(noise_cov) * g_hat * sqrt_m(prior_cov);
    m.theta0 = inv_sqrt(prior_cov) * theta0_hat;
    return m;
}

Eigen::MatrixXd LinearGaussianModel::posterior_cov() const {
    const int dt = d_theta();
    return (Eigen::MatrixXd::Identity(dt, dt) + g.transpose() * g).inverse();
}

Eigen::VectorXd LinearGaussianModel::posterior_mean(const Eigen::VectorXd& y) const {
    return posterior_cov() * (g.transpose() * y + theta0);
}

void LinearGaussianModel::sample_joint(Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& theta) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    theta.resize(d_theta());
    for (int j = 0; j < d_theta(); ++j) theta[j] = theta0[j] + gauss(rng);
    y = g * theta;
    for (int i = 0; i < d_y(); ++i) y[i] += gauss(rng);
}

HGaussianInput LinearGaussianModel::h_gaussian_input() const {
    HGaussianInput in;
    in.d_y = d_y();
    in.d_theta = d_theta();
    const Eigen::MatrixXd gm = g;
    const Eigen::VectorXd t0 = theta0;
    in.forward = [gm](const Eigen::VectorXd& th) { return Eigen::VectorXd(gm * th); };
    in.jacobian = [gm](const Eigen::VectorXd&) { return gm; };
    in.sample_prior = [t0](Rng& rng) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd th(t0.size());
        for (Eigen::Index j = 0; j < t0.size(); ++j) th[j] = t0[j] + gauss(rng);
        return th;
    };
    in.theta0 = theta0;
    return in;
}

TargetDensity linear_gaussian_target(const LinearGaussianModel& model) {
    TargetDensity t;
    t.dims = {model.d_y(), model.d_theta()};
    const Eigen::VectorXd y_ref = model.g * model.theta0;
    for (int i = 0; i < model.d_y(); ++i) {
        const double spread = 5.0 * std::sqrt(1.0 + model.g.row(i).squaredNorm());
        t.y_box.push_back({y_ref[i] - spread, y_ref[i] + spread});
    }
    for (int j = 0; j < model.d_theta(); ++j)
        t.theta_box.push_back({model.theta0[j] - 5.0, model.theta0[j] + 5.0});

    const LinearGaussianModel m = model;
    t.log_joint = [m](const Eigen::VectorXd& y, const Eigen::VectorXd& th) {
        const double quad = (y - m.g * th).squaredNorm() + (th - m.theta0).squaredNorm();
        return -0.5 * quad - 0.9189385332046727417803297 * (m.d_y() + m.d_theta());
    };
    t.log_rho = [m, y_ref](const Eigen::VectorXd& y, const Eigen::VectorXd& th) {
        const double quad = (y - y_ref).squaredNorm() + (th - m.theta0).squaredNorm();
        return -0.5 * quad - 0.9189385332046727417803297 * (m.d_y() + m.d_theta());
    };
    t.grad_log_ratio = [m, y_ref](const Eigen::VectorXd& y, const Eigen::VectorXd& th,
                                  Eigen::VectorXd& gy, Eigen::VectorXd& gt) {
        gy = m.g * (th - m.theta0);
        gt = m.g.transpose() * (y - m.g * th);
    };
    t.sample_joint = [m](Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& th) {
        m.sample_joint(rng, y, th);
    };
    return t;
}

// ---------------------------------------------------------------------------
// 1D diffusion

double Diffusion1DModel::log_kappa(const Eigen::VectorXd& theta, double x) const {
    double v = theta[0];
    int idx = 1;
    for (int j = 0; (1 << (j + 1)) <= n_theta; ++j) {
        const double amp = std::pow(2.0, -decay * j);
        const int nk = 1 << j;
        const double scaled = x * nk;
        int k = static_cast<int>(scaled);
        if (k >= nk) k = nk - 1;
        const double frac = scaled - k;
        const double w = frac < 0.5 ? amp : -amp; // Haar wavelet on [k/2^j, (k+1)/2^j)
        v += theta[idx + k] * w;
        idx += nk;
    }
    return v;
}

Eigen::VectorXd Diffusion1DModel::solve(const Eigen::VectorXd& theta, int n_cells) const {
    if (theta.size() != n_theta) throw DomainError("diffusion1d: theta size mismatch");
    const int n = n_cells;
    const double h = 1.0 / n;
    // kappa at cell midpoints
    Eigen::VectorXd kappa(n);
    for (int i = 0; i < n; ++i) kappa[i] = std::exp(log_kappa(theta, (i + 0.5) * h));
    // Thomas solve of the SPD tridiagonal system for interior nodes 1..n-1
    const int m = n - 1;
    Eigen::VectorXd diag(m), off(m - 1), rhs = Eigen::VectorXd::Constant(m, h * h);
    for (int i = 0; i < m; ++i) diag[i] = kappa[i] + kappa[i + 1];
    for (int i = 0; i + 1 < m; ++i) off[i] = -kappa[i + 1];
    for (int i = 1; i < m; ++i) {
        const double w = off[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    Eigen::VectorXd u(m);
    u[m - 1] = rhs[m - 1] / diag[m - 1];
    for (int i = m - 2; i >= 0; --i) u[i] = (rhs[i] - off[i] * u[i + 1]) / diag[i];
    Eigen::VectorXd full(n + 1);
    full[0] = 0.0;
    full[n] = 0.0;
    full.segment(1, m) = u;
    return full;
}

std::vector<double> Diffusion1DModel::obs_points() const {
    std::vector<double> pts(n_obs);
    for (int i = 0; i < n_obs; ++i) pts[i] = static_cast<double>(i + 1) / (n_obs + 1);
    return pts;
}

Eigen::VectorXd Diffusion1DModel::observe(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd u = solve(theta, cells);
    const auto pts = obs_points();
    Eigen::VectorXd out(n_obs);
    for (int i = 0; i < n_obs; ++i) {
        const double s = pts[i] * cells;
        const int j = std::min(static_cast<int>(s), cells - 1);
        const double fr = s - j;
        out[i] = (1.0 - fr) * u[j] + fr * u[j + 1];
    }
    return out;
}

double Diffusion1DModel::noise_std() const {
    const Eigen::VectorXd base = observe(Eigen::VectorXd::Zero(n_theta));
    return std::sqrt(base.squaredNorm() / base.size()) / snr;
}

TargetDensity diffusion1d_target(const Diffusion1DModel& model) {
    if (model.n_theta < 2 || (model.n_theta & (model.n_theta - 1)) != 0)
        throw ConfigError("diffusion1d: n_theta must be a power of two >= 2");
    TargetDensity t;
    t.dims = {model.n_obs, model.n_theta};
    const double sd = model.noise_std();
    const Eigen::VectorXd base = model.observe(Eigen::VectorXd::Zero(model.n_theta));
    for (int i = 0; i < model.n_obs; ++i) {
        const double hw = 10.0 * sd + std::abs(base[i]) * (std::exp(2.5) - 1.0);
        t.y_box.push_back({base[i] - hw, base[i] + hw});
    }
    const double tb = 8.0 / model.gamma_laplace;
    t.theta_box.assign(model.n_theta, Interval1D{-tb, tb});

    const Diffusion1DModel m = model;
    const double log_laplace = std::log(0.5 * model.gamma_laplace);
    t.log_joint = [m, sd, log_laplace](const Eigen::VectorXd& y, const Eigen::VectorXd& th) {
        const Eigen::VectorXd mu = m.observe(th);
        double s = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            s += normal_logpdf((y[i] - mu[i]) / sd) - std::log(sd);
        for (Eigen::Index j = 0; j < th.size(); ++j)
            s += log_laplace - m.gamma_laplace * std::abs(th[j]);
        return s;
    };
    t.log_rho = [m, sd, base, log_laplace](const Eigen::VectorXd& y, const Eigen::VectorXd& th) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            s += normal_logpdf((y[i] - base[i]) / sd) - std::log(sd);
        for (Eigen::Index j = 0; j < th.size(); ++j)
            s += log_laplace - m.gamma_laplace * std::abs(th[j]);
        return s;
    };
    t.sample_joint = [m, sd](Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& th) {
        std::exponential_distribution<double> expo(m.gamma_laplace);
        std::normal_distribution<double> gauss(0.0, sd);
        th.resize(m.n_theta);
        for (int j = 0; j < m.n_theta; ++j) {
            const double mag = expo(rng);
            th[j] = uniform01(rng) < 0.5 ? -mag : mag;
        }
        const Eigen::VectorXd mu = m.observe(th);
        y.resize(mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i) y[i] = mu[i] + gauss(rng);
    };
    return t;
}

// ---------------------------------------------------------------------------
// banana / bounded-ratio / coupled-pair test densities

TargetDensity banana_target(double sigma) {
    TargetDensity t;
    t.dims = {0, 2};
    t.theta_box = {{-5.0, 5.0}, {-6.0 * sigma, 25.0 + 6.0 * sigma}};
    const double s2 = 2.0 + sigma * sigma; // variance of the second marginal
    const double mu2 = 1.0;                // its mean, E[theta_1^2]
    t.log_joint = [sigma](const Eigen::VectorXd&, const Eigen::VectorXd& th) {
        return normal_logpdf(th[0]) + normal_logpdf((th[1] - th[0] * th[0]) / sigma) -
               std::log(sigma);
    };
    t.log_rho = [s2, mu2](const Eigen::VectorXd&, const Eigen::VectorXd& th) {
        const double sd = std::sqrt(s2);
        return normal_logpdf(th[0]) + normal_logpdf((th[1] - mu2) / sd) - std::log(sd);
    };
    t.grad_log_ratio = [sigma, s2, mu2](const Eigen::VectorXd&, const Eigen::VectorXd& th,
                                        Eigen::VectorXd& gy, Eigen::VectorXd& gt) {
        gy.resize(0);
        gt.resize(2);
        const double resid = th[1] - th[0] * th[0];
        gt[0] = resid * 2.0 * th[0] / (sigma * sigma);
        gt[1] = -resid / (sigma * sigma) + (th[1] - mu2) / s2;
    };
    t.sample_joint = [sigma](Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& th) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        y.resize(0);
        th.resize(2);
        th[0] = gauss(rng);
        th[1] = th[0] * th[0] + sigma * gauss(rng);
    };
    return t;
}

TargetDensity bounded_ratio_target(double strength) {
    TargetDensity t;
    t.dims = {0, 2};
    t.theta_box = {{-1.0, 1.0}, {-1.0, 1.0}};
    const double log_unif = -std::log(4.0);
    t.log_joint = [strength, log_unif](const Eigen::VectorXd&, const Eigen::VectorXd& th) {
        return strength * (std::sin(3.0 * th[0]) * std::cos(2.0 * th[1]) + th[0] * th[1]) + log_unif;
    };
    t.log_rho = [log_unif](const Eigen::VectorXd&, const Eigen::VectorXd&) { return log_unif; };
    t.sample_joint = [](Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& th) {
        y.resize(0);
        th.resize(2);
        th[0] = 2.0 * uniform01(rng) - 1.0;
        th[1] = 2.0 * uniform01(rng) - 1.0;
    };
    return t;
}

TargetDensity coupled_pair_target(int d_y, int d_theta, int y_hot, int theta_hot, double corr) {
    if (y_hot < 0 || y_hot >= d_y || theta_hot < 0 || theta_hot >= d_theta)
        throw DomainError("coupled_pair_target: hot indices out of range");
    if (!(corr > -1.0 && corr < 1.0)) throw DomainError("coupled_pair_target: |corr| < 1");
    TargetDensity t;
    t.dims = {d_y, d_theta};
    t.y_box.assign(d_y, Interval1D{-5.0, 5.0});
    t.theta_box.assign(d_theta, Interval1D{-5.0, 5.0});
    const double det = 1.0 - corr * corr;
    t.log_joint = [=](const Eigen::VectorXd& y, const Eigen::VectorXd& th) {
        double s = 0.0;
        for (int i = 0; i < d_y; ++i)
            if (i != y_hot) s += normal_logpdf(y[i]);
        for (int j = 0; j < d_theta; ++j)
            if (j != theta_hot) s += normal_logpdf(th[j]);
        const double a = y[y_hot], b = th[theta_hot];
        s += -0.5 * (a * a - 2.0 * corr * a * b + b * b) / det - std::log(2.0 * M_PI) -
             0.5 * std::log(det);
        return s;
    };
    t.log_rho = [=](const Eigen::VectorXd& y, const Eigen::VectorXd& th) {
        double s = 0.0;
        for (int i = 0; i < d_y; ++i) s += normal_logpdf(y[i]);
        for (int j = 0; j < d_theta; ++j) s += normal_logpdf(th[j]);
        return s;
    };
    t.grad_log_ratio = [=](const Eigen::VectorXd& y, const Eigen::VectorXd& th,
                           Eigen::VectorXd& gy, Eigen::VectorXd& gt) {
        gy = Eigen::VectorXd::Zero(d_y);
        gt = Eigen::VectorXd::Zero(d_theta);
        const double a = y[y_hot], b = th[theta_hot];
        gy[y_hot] = -(a - corr * b) / det + a;
        gt[theta_hot] = -(b - corr * a) / det + b;
    };
    t.sample_joint = [=](Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& th) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        y.resize(d_y);
        th.resize(d_theta);
        for (int i = 0; i < d_y; ++i) y[i] = gauss(rng);
        for (int j = 0; j < d_theta; ++j) th[j] = gauss(rng);
        th[theta_hot] = corr * y[y_hot] + std::sqrt(det) * gauss(rng);
    };
    return t;
}

} // namespace dirt
