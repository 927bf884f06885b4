#include "dirt/basis.hpp"

#include <Eigen/Cholesky>
#include <atomic>
#include <cmath>
#include <cstdio>

#include "dirt/errors.hpp"

namespace dirt {

namespace {
std::atomic<std::size_t> g_clamp_count{0};
}

std::size_t clamp_warning_count() { return g_clamp_count.load(); }

void note_clamp() {
    if (g_clamp_count.fetch_add(1) == 0)
        std::fprintf(stderr, "warning: point outside domain box clamped to boundary "
                             "(further clamps counted silently)\n");
}

Basis1D::Basis1D(Interval1D interval, Eigen::VectorXd nodes)
    : interval_(interval), nodes_(std::move(nodes)) {
    if (!(interval_.lo < interval_.hi) || !std::isfinite(interval_.lo) || !std::isfinite(interval_.hi))
        throw DomainError("Basis1D: interval must be finite with lo < hi");
    if (nodes_.size() < 2) throw DomainError("Basis1D: need at least 2 nodes");
    for (Eigen::Index i = 0; i + 1 < nodes_.size(); ++i)
        if (!(nodes_[i] < nodes_[i + 1])) throw DomainError("Basis1D: nodes must be strictly increasing");
    if (nodes_[0] != interval_.lo || nodes_[nodes_.size() - 1] != interval_.hi)
        throw DomainError("Basis1D: nodes must span the interval exactly");
}

Basis1D Basis1D::uniform(Interval1D interval, int n_nodes) {
    Eigen::VectorXd nodes = Eigen::VectorXd::LinSpaced(n_nodes, interval.lo, interval.hi);
    nodes[0] = interval.lo;
    nodes[n_nodes - 1] = interval.hi;
    return Basis1D(interval, std::move(nodes));
}

void Basis1D::locate(double x, int& cell, double& t) const {
    if (!std::isfinite(x)) throw DomainError("Basis1D: non-finite evaluation point");
    if (x < interval_.lo) { note_clamp(); x = interval_.lo; }
    if (x > interval_.hi) { note_clamp(); x = interval_.hi; }
    // binary search for the cell containing x
    int lo = 0, hi = cell_count() - 1;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (x >= nodes_[mid]) lo = mid; else hi = mid - 1;
    }
    cell = lo;
    const double h = nodes_[cell + 1] - nodes_[cell];
    t = (x - nodes_[cell]) / h;
    if (t < 0.0) t = 0.0;
    if (t > 1.0) t = 1.0;
}

Eigen::VectorXd Basis1D::eval(double x) const {
    int cell; double t;
    locate(x, cell, t);
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(size());
    phi[cell] = 1.0 - t;
    phi[cell + 1] = t;
    return phi;
}

Eigen::MatrixXd Basis1D::mass_matrix() const {
    const int n = size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n - 1; ++j) {
        const double h = nodes_[j + 1] - nodes_[j];
        m(j, j) += h / 3.0;
        m(j + 1, j + 1) += h / 3.0;
        m(j, j + 1) += h / 6.0;
        m(j + 1, j) += h / 6.0;
    }
    return m;
}

Eigen::MatrixXd Basis1D::mass_cholesky() const {
    Eigen::LLT<Eigen::MatrixXd> llt(mass_matrix());
    if (llt.info() != Eigen::Success) throw BuildError("mass matrix Cholesky failed");
    return llt.matrixL();
}

Cdf1D::Cdf1D(const Basis1D& basis, const Eigen::MatrixXd& coeff, double offset)
    : basis_(&basis) {
    if (coeff.rows() != basis.size() || coeff.cols() < 1)
        throw DomainError("Cdf1D: coefficient matrix shape mismatch");
    if (!coeff.allFinite() || !std::isfinite(offset) || offset < 0.0)
        throw DomainError("Cdf1D: non-finite coefficients");
    const int cells = basis.cell_count();
    q0_.resize(cells); q1_.resize(cells); q2_.resize(cells);
    cum_.resize(cells + 1);
    cum_[0] = 0.0;
    const auto& nodes = basis.nodes();
    for (int j = 0; j < cells; ++j) {
        // linear-in-t expansion per rank column: a + (b - a) t
        double s_aa = 0.0, s_ad = 0.0, s_dd = 0.0;
        for (Eigen::Index l = 0; l < coeff.cols(); ++l) {
            const double a = coeff(j, l);
            const double d = coeff(j + 1, l) - a;
            s_aa += a * a;
            s_ad += a * d;
            s_dd += d * d;
        }
        q0_[j] = s_aa + offset;
        q1_[j] = 2.0 * s_ad;
        q2_[j] = s_dd;
        const double h = nodes[j + 1] - nodes[j];
        cum_[j + 1] = cum_[j] + h * (q0_[j] + 0.5 * q1_[j] + q2_[j] / 3.0);
    }
    mass_ = cum_[cells];
    if (!(mass_ > 0.0) || !std::isfinite(mass_))
        throw BuildError("Cdf1D: degenerate mass (all-zero expansion without regularization)");
}

double Cdf1D::pdf(double x) const {
    int cell; double t;
    basis_->locate(x, cell, t);
    const double v = q0_[cell] + t * (q1_[cell] + t * q2_[cell]);
    return v > 0.0 ? v : 0.0;
}

double Cdf1D::cdf(double x) const {
    int cell; double t;
    basis_->locate(x, cell, t);
    const double h = basis_->nodes()[cell + 1] - basis_->nodes()[cell];
    const double m = cum_[cell] + h * t * (q0_[cell] + t * (0.5 * q1_[cell] + t * q2_[cell] / 3.0));
    double u = m / mass_;
    if (u < 0.0) u = 0.0;
    if (u > 1.0) u = 1.0;
    return u;
}

double Cdf1D::invert(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("Cdf1D::invert: u outside [0,1]");
    const auto& nodes = basis_->nodes();
    if (u <= 0.0) return basis_->interval().lo;
    if (u >= 1.0) return basis_->interval().hi;
    const double target = u * mass_;
    // cell bisection on cumulative masses
    int lo = 0, hi = basis_->cell_count() - 1;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (target >= cum_[mid]) lo = mid; else hi = mid - 1;
    }
    const int j = lo;
    const double h = nodes[j + 1] - nodes[j];
    const double want = (target - cum_[j]) / h; // in units of cell-local mass
    const double cell_mass = (cum_[j + 1] - cum_[j]) / h;
    auto F = [&](double t) { return t * (q0_[j] + t * (0.5 * q1_[j] + t * q2_[j] / 3.0)); };
    auto f = [&](double t) { return q0_[j] + t * (q1_[j] + t * q2_[j]); };
    // tolerance at machine precision in normalized-cdf units, so errors stay
    // negligible even after amplification through layered compositions
    const double tol = 4.0 * 2.220446049250313e-16 * (mass_ / h) + 1e-300 * cell_mass;
    double a = 0.0, b = 1.0;
    double t = cell_mass > 0.0 ? want / cell_mass : 0.5; // linear initial guess
    for (int it = 0; it < 100; ++it) {
        const double r = F(t) - want;
        if (std::abs(r) <= tol) break;
        if (r > 0.0) b = t; else a = t;
        const double d = f(t);
        double tn = (d > 0.0) ? t - r / d : -1.0;
        if (!(tn > a && tn < b)) tn = 0.5 * (a + b); // bisection safeguard
        if (tn == t) break;
        t = tn;
    }
    return nodes[j] + t * h;
}

} // namespace dirt
