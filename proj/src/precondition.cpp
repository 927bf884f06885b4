#include "dirt/precondition.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "dirt/errors.hpp"
#include "dirt/parallel.hpp"

namespace dirt {

namespace {

// Accumulates mean and per-entry standard error of v v^T over sample rows.
// Evaluation may run in parallel; the reduction below is a fixed sequential
// order so results do not depend on the thread count.
void outer_moments(const Eigen::MatrixXd& samples, Eigen::MatrixXd& mean, Eigen::MatrixXd& se) {
    const int n = static_cast<int>(samples.rows());
    const int d = static_cast<int>(samples.cols());
    Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(d, d), s2 = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd v = samples.row(i).transpose();
        const Eigen::MatrixXd o = v * v.transpose();
        s1 += o;
        s2 += o.cwiseProduct(o);
    }
    mean = s1 / n;
    if (n > 1) {
        Eigen::MatrixXd var = (s2 - n * mean.cwiseProduct(mean)) / (n - 1.0);
        se = (var.cwiseMax(0.0) / n).cwiseSqrt();
    } else {
        se = Eigen::MatrixXd::Zero(d, d);
    }
}

} // namespace

HMatrices estimate_h_general(const HGeneralInput& input, int n_samples, std::uint64_t seed) {
    if (!input.grad_log_ratio)
        throw DomainError("estimate_h_general: target has no gradients; use "
                          "estimate_h_gaussian or fd_grad_log_ratio");
    if (!input.sample_joint)
        throw DomainError("estimate_h_general: target has no joint sampler");
    if (n_samples < 2) throw DomainError("estimate_h_general: need n_samples >= 2");

    Eigen::MatrixXd ys(n_samples, input.d_y), ths(n_samples, input.d_theta);
    {
        auto rng = make_rng(seed, 0xa11c);
        Eigen::VectorXd y, th;
        for (int i = 0; i < n_samples; ++i) {
            input.sample_joint(rng, y, th);
            ys.row(i) = y.transpose();
            ths.row(i) = th.transpose();
        }
    }
    Eigen::MatrixXd gy(n_samples, input.d_y), gt(n_samples, input.d_theta);
    parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
        Eigen::VectorXd a, b;
        input.grad_log_ratio(ys.row(i).transpose(), ths.row(i).transpose(), a, b);
        gy.row(i) = a.transpose();
        gt.row(i) = b.transpose();
    });

    HMatrices h;
    h.mode = HMatrices::Mode::monte_carlo_general;
    h.sample_count = n_samples;
    outer_moments(gy, h.h_y, h.se_y);
    outer_moments(gt, h.h_theta, h.se_theta);
    return h;
}

HMatrices estimate_h_gaussian(const HGaussianInput& input, int n_samples, std::uint64_t seed) {
    if (!input.forward || !input.jacobian || !input.sample_prior)
        throw DomainError("estimate_h_gaussian: forward, jacobian, and prior sampler required");
    if (n_samples < 2) throw DomainError("estimate_h_gaussian: need n_samples >= 2");

    Eigen::MatrixXd prior_draws(n_samples, input.d_theta);
    {
        auto rng = make_rng(seed, 0x6a55);
        for (int i = 0; i < n_samples; ++i) prior_draws.row(i) = input.sample_prior(rng).transpose();
    }
    const Eigen::VectorXd g0 = input.forward(input.theta0);

    Eigen::MatrixXd dev(n_samples, input.d_y);
    std::vector<Eigen::MatrixXd> jtj(n_samples);
    parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
        const Eigen::VectorXd th = prior_draws.row(i).transpose();
        dev.row(i) = (input.forward(th) - g0).transpose();
        const Eigen::MatrixXd j = input.jacobian(th);
        jtj[i] = j.transpose() * j;
    });

    HMatrices h;
    h.mode = HMatrices::Mode::gaussian_closed_form;
    h.sample_count = n_samples;
    outer_moments(dev, h.h_y, h.se_y);

    Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(input.d_theta, input.d_theta);
    Eigen::MatrixXd s2 = s1;
    for (int i = 0; i < n_samples; ++i) {
        s1 += jtj[i];
        s2 += jtj[i].cwiseProduct(jtj[i]);
    }
    h.h_theta = s1 / n_samples;
    Eigen::MatrixXd var = (s2 - n_samples * h.h_theta.cwiseProduct(h.h_theta)) / (n_samples - 1.0);
    h.se_theta = (var.cwiseMax(0.0) / n_samples).cwiseSqrt();
    return h;
}

std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::VectorXd&)>
fd_grad_log_ratio(std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> log_ratio,
                  double step_scale) {
    return [log_ratio = std::move(log_ratio), step_scale](
               const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
               Eigen::VectorXd& gy, Eigen::VectorXd& gt) {
        gy.resize(y.size());
        gt.resize(theta.size());
        Eigen::VectorXd yp = y, tm = theta;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double h = step_scale * std::max(1.0, std::abs(y[i]));
            yp[i] = y[i] + h;
            const double fp = log_ratio(yp, theta);
            yp[i] = y[i] - h;
            const double fm = log_ratio(yp, theta);
            yp[i] = y[i];
            gy[i] = (fp - fm) / (2.0 * h);
        }
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const double h = step_scale * std::max(1.0, std::abs(theta[i]));
            tm[i] = theta[i] + h;
            const double fp = log_ratio(y, tm);
            tm[i] = theta[i] - h;
            const double fm = log_ratio(y, tm);
            tm[i] = theta[i];
            gt[i] = (fp - fm) / (2.0 * h);
        }
    };
}

namespace {

void spectrum_block(const Eigen::MatrixXd& h, Preconditioner::Strategy strategy,
                    std::vector<int>& order, Eigen::MatrixXd& rot, Eigen::VectorXd& spec) {
    const int d = static_cast<int>(h.rows());
    order.resize(d);
    std::iota(order.begin(), order.end(), 0);
    if (strategy == Preconditioner::Strategy::reorder) {
        const Eigen::VectorXd diag = h.diagonal();
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return diag[a] > diag[b]; });
        rot = Eigen::MatrixXd::Zero(d, d);
        spec.resize(d);
        for (int j = 0; j < d; ++j) {
            rot(order[j], j) = 1.0; // column j picks original coordinate order[j]
            spec[j] = diag[order[j]];
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
        if (es.info() != Eigen::Success) throw BuildError("preconditioner eigensolve failed");
        spec.resize(d);
        rot.resize(d, d);
        for (int j = 0; j < d; ++j) { // Eigen sorts ascending; flip to descending
            spec[j] = es.eigenvalues()[d - 1 - j];
            rot.col(j) = es.eigenvectors().col(d - 1 - j);
        }
    }
}

int select_n(const Eigen::VectorXd& spec, int fixed, double threshold) {
    const int d = static_cast<int>(spec.size());
    if (fixed > 0) return std::min(fixed, d);
    if (threshold <= 0.0) return d;
    const double total = spec.sum();
    if (total <= 0.0) return 1;
    double tail = total;
    for (int n = 0; n < d; ++n) {
        if (tail <= threshold * total) return std::max(1, n);
        tail -= spec[n];
    }
    return d;
}

} // namespace

Preconditioner build_preconditioner(const HMatrices& h, Preconditioner::Strategy strategy,
                                    const PrecondSelection& sel) {
    Preconditioner p;
    p.strategy = strategy;
    spectrum_block(h.h_y, strategy, p.order_y, p.rotate_y, p.spectrum_y);
    spectrum_block(h.h_theta, strategy, p.order_theta, p.rotate_theta, p.spectrum_theta);
    p.n_y = select_n(p.spectrum_y, sel.n_y, sel.energy_threshold);
    p.n_theta = select_n(p.spectrum_theta, sel.n_theta, sel.energy_threshold);
    p.tail_bound = p.bound_at(p.n_y, p.n_theta);

    const int dy = p.full_d_y(), dt = p.full_d_theta();
    p.whiten_y = p.unwhiten_y = Eigen::MatrixXd::Identity(dy, dy);
    p.whiten_theta = p.unwhiten_theta = Eigen::MatrixXd::Identity(dt, dt);
    p.shift_y = Eigen::VectorXd::Zero(dy);
    p.shift_theta = Eigen::VectorXd::Zero(dt);
    return p;
}

double Preconditioner::bound_at(int ny, int ntheta) const {
    double s = 0.0;
    for (int i = ny; i < spectrum_y.size(); ++i) s += spectrum_y[i];
    for (int j = ntheta; j < spectrum_theta.size(); ++j) s += spectrum_theta[j];
    return 0.25 * s;
}

Eigen::VectorXd Preconditioner::apply_y(const Eigen::VectorXd& y) const {
    return rotate_y.leftCols(n_y).transpose() * (whiten_y * (y - shift_y));
}

Eigen::VectorXd Preconditioner::unapply_y(const Eigen::VectorXd& y_reduced) const {
    return unwhiten_y * (rotate_y.leftCols(n_y) * y_reduced) + shift_y;
}

Eigen::VectorXd Preconditioner::apply_theta(const Eigen::VectorXd& theta) const {
    return rotate_theta.leftCols(n_theta).transpose() * (whiten_theta * (theta - shift_theta));
}

Eigen::VectorXd Preconditioner::unapply_theta(const Eigen::VectorXd& theta_reduced) const {
    return unwhiten_theta * (rotate_theta.leftCols(n_theta) * theta_reduced) + shift_theta;
}

} // namespace dirt
