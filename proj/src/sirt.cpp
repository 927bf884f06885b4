#include "dirt/sirt.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "dirt/errors.hpp"
#include "dirt/stats.hpp"

namespace dirt {

namespace {
// log(exp(a) + exp(b)) allowing -inf
double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}
} // namespace

SirtTransport SirtTransport::build(FunctionalTensorTrain tt, ReferenceMeasure reference,
                                   double gamma) {
    tt.validate();
    if (gamma < 0.0) throw DomainError("SirtTransport: gamma must be >= 0");
    if (reference.dim() != tt.ndim()) throw DomainError("SirtTransport: reference dim mismatch");
    SirtTransport s;
    s.tt_ = std::move(tt);
    s.reference_ = reference;
    s.gamma_ = gamma;

    const int d = s.tt_.ndim();
    s.tail_vol_.assign(d + 1, 1.0);
    for (int k = d - 1; k >= 0; --k)
        s.tail_vol_[k] = s.tail_vol_[k + 1] * s.tt_.basis(k).interval().length();

    // Backward recursion: B_{d-1} = A_{d-1}; B_{k-1} = A_{k-1} x_3 R_k^T where
    // R_k is the triangular factor of the thin QR of the mass-weighted
    // unfolding of B_k. The squared prefix contractions of B_k are then the
    // exact marginals of g^2.
    s.marginal_.resize(d);
    s.marginal_[d - 1] = s.tt_.cores()[d - 1];
    auto weighted_unfold = [&](int k) {
        const TTCore& b = s.marginal_[k];
        const Eigen::MatrixXd chol = s.tt_.basis(k).mass_cholesky();
        const int n = b.n(), rl = b.r_left(), rr = b.r_right();
        Eigen::MatrixXd m(rl, static_cast<Eigen::Index>(n) * rr);
        for (int tau = 0; tau < n; ++tau) {
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(rl, rr);
            for (int i = tau; i < n; ++i) c += chol(i, tau) * b.slice[i];
            m.middleCols(static_cast<Eigen::Index>(tau) * rr, rr) = c;
        }
        return m;
    };
    for (int k = d - 1; k >= 1; --k) {
        Eigen::MatrixXd m = weighted_unfold(k);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(m.transpose());
        const int r = std::min<Eigen::Index>(m.rows(), m.cols());
        Eigen::MatrixXd rfac = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>(); // r x rl
        TTCore prev;
        prev.slice.reserve(s.tt_.cores()[k - 1].n());
        for (const auto& a : s.tt_.cores()[k - 1].slice) prev.slice.push_back(a * rfac.transpose());
        s.marginal_[k - 1] = std::move(prev);
    }
    s.z_tt_ = weighted_unfold(0).squaredNorm();
    if (!std::isfinite(s.z_tt_) || !(s.z_tt_ >= 0.0))
        throw BuildError("SirtTransport: non-finite normalizing constant");
    s.z_total_ = s.z_tt_ + gamma * s.tail_vol_[0];
    if (!(s.z_total_ > 0.0)) throw BuildError("SirtTransport: zero normalizing constant");
    return s;
}

SirtTransport SirtTransport::build_relative_gamma(FunctionalTensorTrain tt,
                                                  ReferenceMeasure reference,
                                                  double gamma_factor) {
    SirtTransport s = build(std::move(tt), reference, 0.0);
    if (gamma_factor > 0.0) {
        const double gamma = gamma_factor * s.z_tt_ / s.tail_vol_[0];
        s.gamma_ = gamma;
        s.z_total_ = s.z_tt_ + gamma * s.tail_vol_[0];
    }
    return s;
}

SirtTransport SirtTransport::from_parts(FunctionalTensorTrain tt, std::vector<TTCore> marginal,
                                        ReferenceMeasure reference, double gamma, double z_tt,
                                        double z_total) {
    tt.validate();
    if (marginal.size() != static_cast<std::size_t>(tt.ndim()))
        throw IoError("sirt layer: marginal tensor count mismatch");
    if (!(z_total > 0.0) || !(z_tt >= 0.0) || gamma < 0.0)
        throw IoError("sirt layer: invalid normalizing constants");
    SirtTransport s;
    s.tt_ = std::move(tt);
    s.marginal_ = std::move(marginal);
    s.reference_ = reference;
    s.gamma_ = gamma;
    s.z_tt_ = z_tt;
    s.z_total_ = z_total;
    const int d = s.tt_.ndim();
    s.tail_vol_.assign(d + 1, 1.0);
    for (int k = d - 1; k >= 0; --k)
        s.tail_vol_[k] = s.tail_vol_[k + 1] * s.tt_.basis(k).interval().length();
    return s;
}

SirtTransport::Prefix SirtTransport::initial_prefix() const {
    Prefix p;
    p.vec = Eigen::RowVectorXd::Ones(1);
    return p;
}

void SirtTransport::advance(Prefix& p, int k, double x) const {
    const Eigen::MatrixXd w = tt_.cores()[k].at(tt_.basis(k), x);
    if (p.dead) {
        p.vec = Eigen::RowVectorXd::Zero(w.cols());
        return;
    }
    Eigen::RowVectorXd nv = p.vec * w;
    const double nrm = nv.norm();
    if (nrm > 0.0 && std::isfinite(nrm)) {
        p.vec = nv / nrm;
        p.log_scale += std::log(nrm);
    } else {
        p.dead = true;
        p.vec = Eigen::RowVectorXd::Zero(w.cols());
    }
}

double SirtTransport::step(Prefix& p, int k, bool forward, double& x, double& u) const {
    const Basis1D& basis = tt_.basis(k);
    const TTCore& b = marginal_[k];
    const double gamma_tail = gamma_ * tail_vol_[k + 1];

    // offset of the gamma floor in prefix-normalized units
    double log_off = -std::numeric_limits<double>::infinity();
    if (gamma_ > 0.0) log_off = std::log(gamma_tail) - 2.0 * p.log_scale;

    bool uniform_only = p.dead;
    if (gamma_ > 0.0 && log_off > 300.0) uniform_only = true;

    double log_marginal;
    if (uniform_only) {
        if (gamma_ <= 0.0)
            throw BuildError("SirtTransport: density fiber vanished without regularization");
        const auto& iv = basis.interval();
        if (forward) {
            u = (x - iv.lo) / iv.length();
            u = std::min(1.0, std::max(0.0, u));
        } else {
            x = iv.lo + u * iv.length();
        }
        log_marginal = std::log(gamma_tail);
    } else {
        Eigen::MatrixXd coeff(b.n(), b.r_right());
        for (int i = 0; i < b.n(); ++i) coeff.row(i) = p.vec * b.slice[i];
        const double off = (gamma_ > 0.0) ? std::exp(log_off) : 0.0;
        Cdf1D cdf(basis, coeff, off);
        if (forward) u = cdf.cdf(x);
        else x = cdf.invert(u);
        log_marginal = 2.0 * p.log_scale + std::log(std::max(cdf.pdf(x), 1e-300));
    }
    advance(p, k, x);
    return log_marginal;
}

double SirtTransport::logpdf(const Eigen::VectorXd& x) const {
    if (x.size() != ndim()) throw DomainError("SirtTransport::logpdf: dimension mismatch");
    Prefix p = initial_prefix();
    for (int k = 0; k < ndim(); ++k) advance(p, k, x[k]);
    const double log_g2 = p.dead ? -std::numeric_limits<double>::infinity() : 2.0 * p.log_scale;
    const double log_gamma = gamma_ > 0.0 ? std::log(gamma_) : -std::numeric_limits<double>::infinity();
    return log_add(log_g2, log_gamma) - std::log(z_total_);
}

double SirtTransport::log_marginal_unnorm(const Eigen::VectorXd& x_prefix) const {
    if (x_prefix.size() < 1 || x_prefix.size() > ndim())
        throw DomainError("log_marginal_unnorm: prefix length out of range");
    Prefix p = initial_prefix();
    double lm = 0.0;
    for (int k = 0; k < x_prefix.size(); ++k) {
        double xk = x_prefix[k], uk;
        lm = step(p, k, true, xk, uk);
    }
    return lm;
}

Eigen::VectorXd SirtTransport::rosenblatt_forward(const Eigen::VectorXd& x) const {
    if (x.size() != ndim()) throw DomainError("rosenblatt_forward: dimension mismatch");
    Eigen::VectorXd u(ndim());
    Prefix p = initial_prefix();
    for (int k = 0; k < ndim(); ++k) {
        double xk = x[k];
        step(p, k, true, xk, u[k]);
    }
    return u;
}

Eigen::VectorXd SirtTransport::rosenblatt_inverse(const Eigen::VectorXd& u) const {
    if (u.size() != ndim()) throw DomainError("rosenblatt_inverse: dimension mismatch");
    Eigen::VectorXd x(ndim());
    Prefix p = initial_prefix();
    for (int k = 0; k < ndim(); ++k) {
        double uk = u[k];
        if (!(uk >= 0.0 && uk <= 1.0)) throw DomainError("rosenblatt_inverse: u outside [0,1]");
        step(p, k, false, x[k], uk);
    }
    return x;
}

Eigen::VectorXd SirtTransport::transport(const Eigen::VectorXd& v) const {
    return rosenblatt_inverse(reference_.to_uniform(v));
}

Eigen::VectorXd SirtTransport::transport_inverse(const Eigen::VectorXd& x) const {
    return reference_.from_uniform(rosenblatt_forward(x));
}

double SirtTransport::push_through(const Eigen::VectorXd& v, Eigen::VectorXd& x_out) const {
    x_out = transport(v);
    return logpdf(x_out) - reference_.logpdf(v);
}

double SirtTransport::pullback_logpdf(
    const std::function<double(const Eigen::VectorXd&)>& log_target,
    const Eigen::VectorXd& v) const {
    Eigen::VectorXd x;
    const double inc = push_through(v, x);
    return log_target(x) - inc;
}

SirtTransport::YState SirtTransport::push_y(const Eigen::VectorXd& y_internal) const {
    const int dy = dims().d_y;
    if (y_internal.size() != dy) throw DomainError("push_y: observation dimension mismatch");
    Prefix p = initial_prefix();
    YState ys;
    ys.u_y.resize(dy);
    ys.log_marginal_y = std::log(z_total_); // d_y == 0: marginal is the full mass
    for (int k = 0; k < dy; ++k) {
        double xk = y_internal[k];
        ys.log_marginal_y = step(p, k, true, xk, ys.u_y[k]);
    }
    ys.vec = p.vec;
    ys.log_scale = p.log_scale;
    ys.dead = p.dead;
    return ys;
}

Eigen::VectorXd SirtTransport::conditional_inverse(const YState& ys,
                                                   const Eigen::VectorXd& u_theta) const {
    const int dy = dims().d_y, dt = dims().d_theta;
    if (u_theta.size() != dt) throw DomainError("conditional_inverse: belief dimension mismatch");
    Prefix p{ys.vec, ys.log_scale, ys.dead};
    Eigen::VectorXd theta(dt);
    for (int k = 0; k < dt; ++k) {
        double uk = u_theta[k];
        if (!(uk >= 0.0 && uk <= 1.0)) throw DomainError("conditional_inverse: u outside [0,1]");
        step(p, dy + k, false, theta[k], uk);
    }
    return theta;
}

double SirtTransport::conditional_forward(const YState& ys, const Eigen::VectorXd& theta,
                                          Eigen::VectorXd* u_theta) const {
    const int dy = dims().d_y, dt = dims().d_theta;
    if (theta.size() != dt) throw DomainError("conditional_forward: belief dimension mismatch");
    Prefix p{ys.vec, ys.log_scale, ys.dead};
    if (u_theta) u_theta->resize(dt);
    for (int k = 0; k < dt; ++k) {
        double xk = theta[k];
        double uk;
        step(p, dy + k, true, xk, uk);
        if (u_theta) (*u_theta)[k] = uk;
    }
    const double log_g2 = p.dead ? -std::numeric_limits<double>::infinity() : 2.0 * p.log_scale;
    const double log_gamma = gamma_ > 0.0 ? std::log(gamma_) : -std::numeric_limits<double>::infinity();
    return log_add(log_g2, log_gamma) - std::log(z_total_);
}

double SirtTransport::log_marginal_y(const YState& ys) const {
    return ys.log_marginal_y - std::log(z_total_);
}

Eigen::VectorXd SirtTransport::conditional_map(const Eigen::VectorXd& y_internal,
                                               const Eigen::VectorXd& v_theta) const {
    // single-entry per-thread memo: repeated queries at the same y skip the
    // prefix contraction entirely
    thread_local const SirtTransport* memo_owner = nullptr;
    thread_local Eigen::VectorXd memo_y;
    thread_local YState memo_state;
    if (memo_owner != this || memo_y.size() != y_internal.size() || memo_y != y_internal) {
        memo_state = push_y(y_internal);
        memo_owner = this;
        memo_y = y_internal;
    }
    Eigen::VectorXd u(v_theta.size());
    const int dy = dims().d_y;
    for (Eigen::Index i = 0; i < v_theta.size(); ++i)
        u[i] = reference_.cdf1(v_theta[i]);
    (void)dy;
    return conditional_inverse(memo_state, u);
}

} // namespace dirt
