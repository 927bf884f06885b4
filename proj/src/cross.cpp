#include "dirt/cross.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

#include "dirt/errors.hpp"
#include "dirt/rng.hpp"

namespace dirt {

namespace {

using IndexSet = std::vector<std::vector<int>>; // multi-indices, one per rank slot

struct Sampler {
    const LogBatchOracle* oracle;
    long evals = 0;
    double shift = std::numeric_limits<double>::quiet_NaN();

    // Evaluates exp(log f - shift). The shift is frozen lazily from the first
    // batch and only raised when a later batch would overflow; interpolation
    // cores are scale-invariant, so raising it mid-pass is harmless.
    Eigen::VectorXd values(const Eigen::MatrixXd& pts) {
        Eigen::VectorXd lg = (*oracle)(pts);
        evals += lg.size();
        for (Eigen::Index i = 0; i < lg.size(); ++i)
            if (std::isnan(lg[i])) {
                std::ostringstream os;
                os << "cross oracle returned NaN at point (";
                for (int k = 0; k < pts.rows(); ++k) os << (k ? ", " : "") << pts(k, i);
                os << ")";
                throw BuildError(os.str());
            }
        const double mx = lg.maxCoeff();
        if (std::isnan(shift)) {
            if (!std::isfinite(mx))
                throw BuildError("cross oracle: first batch is identically zero");
            shift = mx;
        } else if (mx - shift > 250.0) {
            shift = mx;
        }
        return (lg.array() - shift).exp().matrix();
    }
};

std::vector<int> random_multi_index(Rng& rng, const std::vector<Basis1D>& bases, int from, int to) {
    std::vector<int> idx;
    idx.reserve(to - from);
    for (int k = from; k < to; ++k) {
        std::uniform_int_distribution<int> d(0, bases[k].size() - 1);
        idx.push_back(d(rng));
    }
    return idx;
}

// Orthonormal column basis of the numerical range of m. Rank-revealing
// truncation keeps maxvol away from noise directions when the sampled block
// is effectively low rank (e.g. in density tails that underflow to zero).
Eigen::MatrixXd range_basis(const Eigen::MatrixXd& m) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::Index full = std::min(m.rows(), m.cols());
    const double top = std::abs(qr.matrixQR()(0, 0));
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < full; ++i)
        if (std::abs(qr.matrixQR()(i, i)) > 1e-14 * top) ++rank;
    rank = std::max<Eigen::Index>(rank, 1);
    return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), rank);
}

} // namespace

LogBatchOracle log_oracle_from_values(BatchOracle f) {
    return [f = std::move(f)](const Eigen::MatrixXd& pts) {
        Eigen::VectorXd v = f(pts);
        return Eigen::VectorXd(v.array().max(0.0).log().matrix());
    };
}

CrossResult tt_cross(const LogBatchOracle& log_f, std::vector<Basis1D> bases, Dims dims,
                     const CrossConfig& cfg, std::uint64_t seed,
                     const FunctionalTensorTrain* init) {
    const int d = static_cast<int>(bases.size());
    if (d != dims.total()) throw DomainError("tt_cross: dims/bases mismatch");
    if (cfg.init_rank < 1 || cfg.init_rank > cfg.max_rank)
        throw ConfigError("tt_cross: need 1 <= init_rank <= max_rank");
    if (!(cfg.tolerance > 0.0)) throw ConfigError("tt_cross: tolerance must be positive");
    if (cfg.validation_size < 100) throw ConfigError("tt_cross: validation_size must be >= 100");

    Sampler sampler{&log_f};
    auto rng = make_rng(seed, 0xc805);
    CrossResult out;

    auto make_point_block = [&](const IndexSet& left, int k, const IndexSet& right) {
        const int rl = static_cast<int>(left.size());
        const int rr = static_cast<int>(right.size());
        const int n = bases[k].size();
        Eigen::MatrixXd pts(d, static_cast<Eigen::Index>(rl) * n * rr);
        Eigen::Index c = 0;
        for (int j = 0; j < rr; ++j)
            for (int i = 0; i < n; ++i)
                for (int a = 0; a < rl; ++a, ++c) {
                    for (int q = 0; q < k; ++q) pts(q, c) = bases[q].nodes()[left[a][q]];
                    pts(k, c) = bases[k].nodes()[i];
                    for (int q = k + 1; q < d; ++q) pts(q, c) = bases[q].nodes()[right[j][q - k - 1]];
                }
        return pts;
    };

    if (d == 1) {
        Eigen::MatrixXd pts(1, bases[0].size());
        for (int i = 0; i < bases[0].size(); ++i) pts(0, i) = bases[0].nodes()[i];
        Eigen::VectorXd v = sampler.values(pts);
        TTCore core;
        for (int i = 0; i < bases[0].size(); ++i)
            core.slice.push_back(Eigen::MatrixXd::Constant(1, 1, v[i]));
        out.tt = FunctionalTensorTrain({core}, bases, dims);
        out.eval_count = sampler.evals;
        out.achieved_error = 0.0;
        out.sweeps_done = 1;
        out.log_shift = sampler.shift;
    } else {
        std::vector<IndexSet> left(d - 1), right(d - 1);
        if (init) {
            CrossIndexSets seeds = index_sets_from_tt(*init);
            left = seeds.left_sets;
            right = seeds.right_sets;
        } else {
            for (int k = 0; k < d - 1; ++k)
                for (int s = 0; s < cfg.init_rank; ++s) {
                    left[k].push_back(random_multi_index(rng, bases, 0, k + 1));
                    right[k].push_back(random_multi_index(rng, bases, k + 1, d));
                }
        }

        std::vector<TTCore> cores(d);
        auto assemble = [&]() { return FunctionalTensorTrain(cores, bases, dims); };

        // validation on random grid tuples, so the reported error measures the
        // cross approximation itself rather than the basis resolution
        auto validate = [&](const FunctionalTensorTrain& tt) {
            Eigen::MatrixXd pts(d, cfg.validation_size);
            for (int j = 0; j < cfg.validation_size; ++j)
                for (int k = 0; k < d; ++k) {
                    std::uniform_int_distribution<int> node(0, bases[k].size() - 1);
                    pts(k, j) = bases[k].nodes()[node(rng)];
                }
            const Eigen::VectorXd fv = sampler.values(pts);
            double emax = 0.0, fmax = 0.0;
            for (int j = 0; j < cfg.validation_size; ++j) {
                emax = std::max(emax, std::abs(fv[j] - tt.eval(pts.col(j))));
                fmax = std::max(fmax, std::abs(fv[j]));
            }
            return (fmax > 0.0) ? emax / fmax : emax;
        };

        const IndexSet empty_set{{}};
        double prev_err = std::numeric_limits<double>::infinity();
        bool done = false;
        for (int pass = 0; pass < cfg.max_sweeps && !done; ++pass) {
            const bool lr = (pass % 2 == 0);
            if (lr) {
                for (int k = 0; k < d; ++k) {
                    const IndexSet& il = (k == 0) ? empty_set : left[k - 1];
                    const IndexSet& jr = (k == d - 1) ? empty_set : right[k];
                    const int rl = static_cast<int>(il.size());
                    const int rr = static_cast<int>(jr.size());
                    const int n = bases[k].size();
                    Eigen::VectorXd vals = sampler.values(make_point_block(il, k, jr));
                    Eigen::MatrixXd v = Eigen::Map<Eigen::MatrixXd>(vals.data(), static_cast<Eigen::Index>(rl) * n, rr);
                    if (k == d - 1) {
                        cores[k] = TTCore::from_left_unfold(v, rl, n);
                        continue;
                    }
                    Eigen::MatrixXd q = range_basis(v);
                    const int r = static_cast<int>(q.cols());
                    const auto rows = maxvol(q);
                    Eigen::MatrixXd sub(r, r);
                    for (int s = 0; s < r; ++s) sub.row(s) = q.row(rows[s]);
                    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub.transpose());
                    Eigen::MatrixXd core = lu.solve(q.transpose()).transpose();
                    cores[k] = TTCore::from_left_unfold(core, rl, n);
                    IndexSet next;
                    for (int s = 0; s < r; ++s) {
                        const int a = rows[s] % rl;
                        const int node = rows[s] / rl;
                        auto t = (k == 0) ? std::vector<int>{} : il[a];
                        t.push_back(node);
                        next.push_back(std::move(t));
                    }
                    left[k] = std::move(next);
                }
            } else {
                for (int k = d - 1; k >= 0; --k) {
                    const IndexSet& il = (k == 0) ? empty_set : left[k - 1];
                    const IndexSet& jr = (k == d - 1) ? empty_set : right[k];
                    const int rl = static_cast<int>(il.size());
                    const int rr = static_cast<int>(jr.size());
                    const int n = bases[k].size();
                    Eigen::VectorXd vals = sampler.values(make_point_block(il, k, jr));
                    Eigen::Map<Eigen::MatrixXd> v(vals.data(), static_cast<Eigen::Index>(rl) * n, rr);
                    if (k == 0) {
                        Eigen::MatrixXd w(rl, static_cast<Eigen::Index>(n) * rr);
                        for (int i = 0; i < n; ++i)
                            w.middleCols(static_cast<Eigen::Index>(i) * rr, rr) = v.middleRows(static_cast<Eigen::Index>(i) * rl, rl);
                        cores[k] = TTCore::from_right_unfold(w, n, rr);
                        continue;
                    }
                    Eigen::MatrixXd wt(static_cast<Eigen::Index>(n) * rr, rl);
                    for (int i = 0; i < n; ++i)
                        wt.middleRows(static_cast<Eigen::Index>(i) * rr, rr) =
                            v.middleRows(static_cast<Eigen::Index>(i) * rl, rl).transpose();
                    Eigen::MatrixXd q = range_basis(wt);
                    const int r = static_cast<int>(q.cols());
                    const auto rows = maxvol(q);
                    Eigen::MatrixXd sub(r, r);
                    for (int s = 0; s < r; ++s) sub.row(s) = q.row(rows[s]);
                    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub.transpose());
                    Eigen::MatrixXd core = lu.solve(q.transpose()); // r x (n*rr)
                    cores[k] = TTCore::from_right_unfold(core, n, rr);
                    IndexSet next;
                    for (int s = 0; s < r; ++s) {
                        const int node = rows[s] / rr;
                        const int b = rows[s] % rr;
                        std::vector<int> t{node};
                        if (k < d - 1) t.insert(t.end(), jr[b].begin(), jr[b].end());
                        next.push_back(std::move(t));
                    }
                    right[k - 1] = std::move(next);
                }
            }

            FunctionalTensorTrain tt = assemble();
            const double err = validate(tt);
            out.sweeps_done = pass + 1;
            out.achieved_error = err;
            out.tt = std::move(tt);
            if (err <= cfg.tolerance && prev_err <= cfg.tolerance) { done = true; break; }
            prev_err = err;

            if (pass + 1 < cfg.max_sweeps && err > cfg.tolerance && cfg.enrichment > 0) {
                // grow the side the next pass will consume
                const bool next_lr = ((pass + 1) % 2 == 0);
                for (int k = 0; k < d - 1; ++k) {
                    IndexSet& grow = next_lr ? right[k] : left[k];
                    const int lo = next_lr ? k + 1 : 0;
                    const int hi = next_lr ? d : k + 1;
                    for (int e = 0; e < cfg.enrichment && static_cast<int>(grow.size()) < cfg.max_rank; ++e)
                        grow.push_back(random_multi_index(rng, bases, lo, hi));
                }
            }
        }

        tt_round(out.tt, cfg.rounding_tol);
        out.achieved_error = validate(out.tt);
        out.eval_count = sampler.evals;
        out.log_shift = sampler.shift;
    }

    // fold the scale back when representable so the result approximates f itself
    if (std::abs(out.log_shift) < 250.0) {
        const double s = std::exp(out.log_shift);
        for (auto& m : out.tt.cores().back().slice) m *= s;
        out.log_shift = 0.0;
    }
    return out;
}

} // namespace dirt
