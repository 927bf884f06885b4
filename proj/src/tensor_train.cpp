#include "dirt/tensor_train.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "dirt/errors.hpp"
#include "dirt/rng.hpp"

namespace dirt {

Eigen::MatrixXd TTCore::left_unfold() const {
    const int rl = r_left(), rr = r_right(), nn = n();
    Eigen::MatrixXd m(rl * nn, rr);
    for (int i = 0; i < nn; ++i) m.middleRows(static_cast<Eigen::Index>(i) * rl, rl) = slice[i];
    return m;
}

Eigen::MatrixXd TTCore::right_unfold() const {
    const int rl = r_left(), rr = r_right(), nn = n();
    Eigen::MatrixXd m(rl, nn * rr);
    for (int i = 0; i < nn; ++i) m.middleCols(static_cast<Eigen::Index>(i) * rr, rr) = slice[i];
    return m;
}

TTCore TTCore::from_left_unfold(const Eigen::MatrixXd& m, int r_left, int n) {
    TTCore c;
    c.slice.reserve(n);
    for (int i = 0; i < n; ++i) c.slice.push_back(m.middleRows(static_cast<Eigen::Index>(i) * r_left, r_left));
    return c;
}

TTCore TTCore::from_right_unfold(const Eigen::MatrixXd& m, int n, int r_right) {
    TTCore c;
    c.slice.reserve(n);
    for (int i = 0; i < n; ++i) c.slice.push_back(m.middleCols(static_cast<Eigen::Index>(i) * r_right, r_right));
    return c;
}

Eigen::MatrixXd TTCore::at(const Basis1D& basis, double x) const {
    int cell; double t;
    basis.locate(x, cell, t);
    return (1.0 - t) * slice[cell] + t * slice[cell + 1];
}

FunctionalTensorTrain::FunctionalTensorTrain(std::vector<TTCore> cores,
                                             std::vector<Basis1D> bases, Dims dims)
    : cores_(std::move(cores)), bases_(std::move(bases)), dims_(dims) {
    validate();
}

void FunctionalTensorTrain::validate() const {
    if (cores_.empty() || cores_.size() != bases_.size())
        throw BuildError("tensor train: core/basis count mismatch");
    if (dims_.total() != ndim()) throw BuildError("tensor train: dims mismatch");
    if (cores_.front().r_left() != 1 || cores_.back().r_right() != 1)
        throw BuildError("tensor train: boundary ranks must be 1");
    for (int k = 0; k < ndim(); ++k) {
        if (cores_[k].n() != bases_[k].size())
            throw BuildError("tensor train: node count mismatch at dim " + std::to_string(k));
        if (k + 1 < ndim() && cores_[k].r_right() != cores_[k + 1].r_left())
            throw BuildError("tensor train: rank chain broken at bond " + std::to_string(k));
        for (const auto& s : cores_[k].slice)
            if (!s.allFinite()) throw BuildError("tensor train: non-finite core entry");
    }
}

std::vector<int> FunctionalTensorTrain::ranks() const {
    std::vector<int> r(ndim() + 1, 1);
    for (int k = 0; k < ndim(); ++k) r[k + 1] = cores_[k].r_right();
    return r;
}

int FunctionalTensorTrain::max_rank() const {
    int r = 1;
    for (const auto& c : cores_) r = std::max(r, c.r_right());
    return r;
}

double FunctionalTensorTrain::domain_volume() const {
    double v = 1.0;
    for (const auto& b : bases_) v *= b.interval().length();
    return v;
}

double FunctionalTensorTrain::eval(const Eigen::VectorXd& x) const {
    if (x.size() != ndim()) throw DomainError("tensor train eval: dimension mismatch");
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Ones(1);
    for (int k = 0; k < ndim(); ++k) {
        int cell; double t;
        bases_[k].locate(x[k], cell, t);
        const auto& a = cores_[k].slice[cell];
        const auto& b = cores_[k].slice[cell + 1];
        acc = (1.0 - t) * (acc * a) + t * (acc * b);
    }
    return acc(0);
}

void tt_round(FunctionalTensorTrain& tt, double rel_tol) {
    auto& cores = tt.cores();
    const int d = static_cast<int>(cores.size());
    if (d < 2) return;
    // right-to-left orthogonalization
    for (int k = d - 1; k >= 1; --k) {
        Eigen::MatrixXd w = cores[k].right_unfold();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(w.transpose());
        const int r = std::min<int>(w.rows(), w.cols());
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(w.cols(), r);
        Eigen::MatrixXd rfac = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
        cores[k] = TTCore::from_right_unfold(q.transpose(), cores[k].n(), cores[k].r_right());
        for (auto& s : cores[k - 1].slice) s = s * rfac.transpose();
    }
    // left-to-right SVD truncation
    for (int k = 0; k < d - 1; ++k) {
        Eigen::MatrixXd m = cores[k].left_unfold();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double cut = std::max(rel_tol, 1e-14) * (sv.size() ? sv[0] : 0.0);
        int r = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv[i] > cut) ++r;
        r = std::max(r, 1);
        Eigen::MatrixXd u = svd.matrixU().leftCols(r);
        Eigen::MatrixXd carry = sv.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
        cores[k] = TTCore::from_left_unfold(u, cores[k].r_left(), cores[k].n());
        for (auto& s : cores[k + 1].slice) s = carry * s;
    }
}

std::vector<int> maxvol(const Eigen::MatrixXd& q, double tol, int max_iters) {
    const int m = static_cast<int>(q.rows());
    const int r = static_cast<int>(q.cols());
    if (m < r) throw BuildError("maxvol: matrix has fewer rows than columns");
    // rank-revealing start: pivoted QR on the transpose picks independent rows
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rr(q.transpose());
    std::vector<int> sel(r);
    for (int j = 0; j < r; ++j) sel[j] = static_cast<int>(rr.colsPermutation().indices()[j]);
    for (int it = 0; it < max_iters; ++it) {
        Eigen::MatrixXd sub(r, r);
        for (int j = 0; j < r; ++j) sub.row(j) = q.row(sel[j]);
        // b = q * sub^{-1}
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub.transpose());
        Eigen::MatrixXd b = lu.solve(q.transpose()).transpose();
        int bi = 0, bj = 0;
        double best = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < r; ++j) {
                const double v = std::abs(b(i, j));
                if (v > best) { best = v; bi = i; bj = j; }
            }
        if (best <= tol || !std::isfinite(best)) break;
        sel[bj] = bi;
    }
    return sel;
}

namespace {

// One-sided sweep shared by the left/right index derivations.
std::vector<std::vector<std::vector<int>>> derive_sets(const FunctionalTensorTrain& tt, bool from_left) {
    const int d = tt.ndim();
    std::vector<std::vector<std::vector<int>>> sets(std::max(0, d - 1));
    Eigen::MatrixXd carry = Eigen::MatrixXd::Identity(1, 1);
    if (from_left) {
        std::vector<std::vector<int>> prev{{}};
        for (int k = 0; k < d - 1; ++k) {
            const auto& core = tt.cores()[k];
            const int rl = static_cast<int>(carry.rows());
            Eigen::MatrixXd m(rl * core.n(), core.r_right());
            for (int i = 0; i < core.n(); ++i)
                m.middleRows(static_cast<Eigen::Index>(i) * rl, rl) = carry * core.slice[i];
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
            const int r = std::min<int>(m.rows(), m.cols());
            Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), r);
            Eigen::MatrixXd rfac = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
            auto rows = maxvol(q);
            std::vector<std::vector<int>> cur;
            Eigen::MatrixXd sub(static_cast<int>(rows.size()), r);
            for (std::size_t s = 0; s < rows.size(); ++s) {
                const int alpha = rows[s] % rl;
                const int node = rows[s] / rl;
                auto t = prev[alpha];
                t.push_back(node);
                cur.push_back(std::move(t));
                sub.row(static_cast<Eigen::Index>(s)) = q.row(rows[s]);
            }
            sets[k] = cur;
            prev = std::move(cur);
            carry = sub * rfac; // restriction of the unfolding to the chosen rows
        }
    } else {
        std::vector<std::vector<int>> prev{{}};
        for (int k = d - 1; k >= 1; --k) {
            const auto& core = tt.cores()[k];
            const int rr = static_cast<int>(carry.cols());
            Eigen::MatrixXd m(core.r_left(), core.n() * rr);
            for (int i = 0; i < core.n(); ++i)
                m.middleCols(static_cast<Eigen::Index>(i) * rr, rr) = core.slice[i] * carry;
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(m.transpose());
            const int r = std::min<int>(m.rows(), m.cols());
            Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.cols(), r);
            Eigen::MatrixXd rfac = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
            auto rows = maxvol(q);
            std::vector<std::vector<int>> cur;
            Eigen::MatrixXd sub(static_cast<int>(rows.size()), r);
            for (std::size_t s = 0; s < rows.size(); ++s) {
                const int node = rows[s] / rr;
                const int beta = rows[s] % rr;
                std::vector<int> t{node};
                t.insert(t.end(), prev[beta].begin(), prev[beta].end());
                cur.push_back(std::move(t));
                sub.row(static_cast<Eigen::Index>(s)) = q.row(rows[s]);
            }
            sets[k - 1] = cur;
            prev = std::move(cur);
            carry = (sub * rfac).transpose();
        }
    }
    return sets;
}

} // namespace

CrossIndexSets index_sets_from_tt(const FunctionalTensorTrain& tt) {
    CrossIndexSets s;
    s.left_sets = derive_sets(tt, true);
    s.right_sets = derive_sets(tt, false);
    return s;
}

L2Estimate l2_error_estimate(const FunctionalTensorTrain& tt, const BatchOracle& f,
                             int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw DomainError("l2_error_estimate: n_samples must be >= 1");
    const int d = tt.ndim();
    auto rng = make_rng(seed, 0x12e7);
    Eigen::MatrixXd pts(d, n_samples);
    for (int j = 0; j < n_samples; ++j)
        for (int k = 0; k < d; ++k) {
            const auto& iv = tt.basis(k).interval();
            pts(k, j) = iv.lo + uniform01(rng) * iv.length();
        }
    const Eigen::VectorXd fv = f(pts);
    double mean = 0.0, m2 = 0.0;
    for (int j = 0; j < n_samples; ++j) {
        const double e = fv[j] - tt.eval(pts.col(j));
        const double sq = e * e;
        const double delta = sq - mean;
        mean += delta / (j + 1);
        m2 += delta * (sq - mean);
    }
    const double vol = tt.domain_volume();
    const double est_sq = mean * vol;
    const double var_mean = (n_samples > 1) ? m2 / (n_samples - 1.0) / n_samples : 0.0;
    const double se_sq = std::sqrt(var_mean) * vol;
    L2Estimate out;
    out.value = std::sqrt(std::max(0.0, est_sq));
    out.std_error = (out.value > 0.0) ? 0.5 * se_sq / out.value : std::sqrt(se_sq);
    return out;
}

} // namespace dirt
