#include "dirt/dirt.hpp"

#include <chrono>
#include <cmath>

#include "dirt/errors.hpp"
#include "dirt/parallel.hpp"
#include "dirt/stats.hpp"

namespace dirt {

std::vector<int> block_permutation(const Dims& dims) {
    std::vector<int> perm(dims.total());
    for (int j = 0; j < dims.d_y; ++j) perm[j] = dims.d_y - 1 - j;
    for (int j = dims.d_y; j < dims.total(); ++j) perm[j] = j;
    return perm;
}

Eigen::VectorXd permute_coords(const Eigen::VectorXd& x, const std::vector<int>& perm) {
    Eigen::VectorXd out(x.size());
    for (std::size_t j = 0; j < perm.size(); ++j) out[j] = x[perm[j]];
    return out;
}

BridgingTarget reduce_target(const BridgingTarget& full, const Preconditioner& p,
                             const std::vector<Interval1D>& y_box_reduced,
                             const std::vector<Interval1D>& theta_box_reduced) {
    BridgingTarget r;
    r.dims = {p.n_y, p.n_theta};
    if (p.strategy == Preconditioner::Strategy::reorder && y_box_reduced.empty()) {
        for (int i = 0; i < p.n_y; ++i) r.y_box.push_back(full.y_box[p.order_y[i]]);
        for (int j = 0; j < p.n_theta; ++j) r.theta_box.push_back(full.theta_box[p.order_theta[j]]);
    } else {
        if (static_cast<int>(y_box_reduced.size()) != p.n_y ||
            static_cast<int>(theta_box_reduced.size()) != p.n_theta)
            throw ConfigError("reduce_target: rotated coordinates need explicit boxes");
        r.y_box = y_box_reduced;
        r.theta_box = theta_box_reduced;
    }
    const int full_dy = p.full_d_y();
    const int full_dt = p.full_d_theta();
    r.eval = [&full, p, full_dy, full_dt](const Eigen::MatrixXd& pts, Eigen::VectorXd& lphi,
                                          Eigen::VectorXd& lrho) {
        Eigen::MatrixXd lifted(full_dy + full_dt, pts.cols());
        for (Eigen::Index c = 0; c < pts.cols(); ++c) {
            lifted.col(c).head(full_dy) = p.unapply_y(pts.col(c).head(p.n_y));
            lifted.col(c).tail(full_dt) = p.unapply_theta(pts.col(c).tail(p.n_theta));
        }
        full.eval(lifted, lphi, lrho);
    };
    return r;
}

void TemperingSchedule::validate() const {
    if (!(beta0 > 0.0 && beta0 <= 1.0)) throw ConfigError("schedule: need 0 < beta0 <= 1");
    if (kind == Kind::geometric && !(ratio > 1.0)) throw ConfigError("schedule: geometric ratio must exceed 1");
    if (kind == Kind::uniform && levels < 1) throw ConfigError("schedule: uniform needs levels >= 1");
    if (kind == Kind::adaptive && !(eta > 0.0 && eta < 1.0)) throw ConfigError("schedule: adaptive eta in (0,1)");
    if (kind == Kind::adaptive && n_adapt_samples < 100) throw ConfigError("schedule: n_adapt_samples >= 100");
}

std::vector<double> TemperingSchedule::ladder() const {
    std::vector<double> betas;
    if (kind == Kind::geometric) {
        double b = beta0;
        for (;;) {
            betas.push_back(std::min(b, 1.0));
            if (betas.back() >= 1.0) break;
            b *= ratio;
        }
    } else if (kind == Kind::uniform) {
        for (int l = 1; l <= levels; ++l) betas.push_back(static_cast<double>(l) / levels);
        betas.back() = 1.0;
    }
    return betas;
}

CountedTarget::CountedTarget(const BridgingTarget& target, std::vector<int> perm)
    : target_(&target), perm_(std::move(perm)) {}

void CountedTarget::eval_internal(const Eigen::MatrixXd& pts, Eigen::VectorXd& log_phi,
                                  Eigen::VectorXd& log_rho) const {
    Eigen::MatrixXd ext(pts.rows(), pts.cols());
    for (Eigen::Index c = 0; c < pts.cols(); ++c)
        for (std::size_t j = 0; j < perm_.size(); ++j) ext(perm_[j], c) = pts(j, c);
    target_->eval(ext, log_phi, log_rho);
    count_.fetch_add(pts.cols());
}

double tempering_gap_estimate(const Eigen::VectorXd& log_phi, const Eigen::VectorXd& log_w,
                              double dbeta) {
    const double lse_half = log_sum_exp(0.5 * dbeta * log_phi + log_w);
    const double lse_full = log_sum_exp(dbeta * log_phi + log_w);
    const double lse_w = log_sum_exp(log_w);
    const double bc = std::exp(lse_half - 0.5 * (lse_w + lse_full));
    return std::sqrt(std::max(0.0, 1.0 - std::min(1.0, bc)));
}

namespace {

// Draws n reference samples, pushes them through the stack, and evaluates the
// target; returns internal-space points, pushforward log densities, and the
// target components.
void sample_stack(const std::vector<SirtTransport>& layers, const ReferenceMeasure& ref,
                  const CountedTarget& target, int n, std::uint64_t seed,
                  Eigen::MatrixXd& xs, Eigen::VectorXd& logp, Eigen::VectorXd& lphi,
                  Eigen::VectorXd& lrho) {
    const int d = ref.dim();
    Eigen::MatrixXd us(d, n);
    auto rng = make_rng(seed, 0xd1a6);
    for (int i = 0; i < n; ++i) us.col(i) = ref.sample(rng);
    xs.resize(d, n);
    logp.resize(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        Eigen::VectorXd v = us.col(static_cast<Eigen::Index>(i));
        double logq = 0.0;
        Eigen::VectorXd x;
        for (int j = static_cast<int>(layers.size()) - 1; j >= 0; --j) {
            logq += layers[j].push_through(v, x);
            v = x;
        }
        xs.col(static_cast<Eigen::Index>(i)) = v;
        logp[static_cast<Eigen::Index>(i)] = ref.logpdf(us.col(static_cast<Eigen::Index>(i))) + logq;
    });
    target.eval_internal(xs, lphi, lrho);
}

} // namespace

double next_beta_adaptive(const std::vector<SirtTransport>& layers_so_far,
                          const CountedTarget& target, const ReferenceMeasure& reference,
                          double beta, double eta, int n_samples, std::uint64_t seed) {
    if (n_samples < 100) throw DomainError("next_beta_adaptive: need n_samples >= 100");
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("next_beta_adaptive: eta in (0,1)");
    Eigen::MatrixXd xs;
    Eigen::VectorXd logp, lphi, lrho;
    sample_stack(layers_so_far, reference, target, n_samples, seed, xs, logp, lphi, lrho);
    const Eigen::VectorXd log_w = beta * lphi + lrho - logp;
    const double weight_ess = ess(log_w);
    if (!(weight_ess >= 10.0))
        throw BuildError("next_beta_adaptive: degenerate importance weights, ESS = " +
                         std::to_string(weight_ess));
    const double dmax = 1.0 - beta;
    if (tempering_gap_estimate(lphi, log_w, dmax) < eta) return 1.0;
    double lo = 0.0, hi = dmax;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dval = tempering_gap_estimate(lphi, log_w, mid);
        if (std::abs(dval - eta) <= 1e-3) return std::min(beta + mid, 1.0);
        if (dval > eta) hi = mid; else lo = mid;
    }
    return std::min(beta + 0.5 * (lo + hi), 1.0);
}

DirtTransport DirtTransport::build(const BridgingTarget& target, const ReferenceMeasure& reference,
                                   const TemperingSchedule& schedule, const DirtBuildOptions& opts,
                                   std::optional<Preconditioner> precond) {
    schedule.validate();
    const Dims dims = target.dims;
    const int d = dims.total();
    if (static_cast<int>(target.y_box.size()) != dims.d_y ||
        static_cast<int>(target.theta_box.size()) != dims.d_theta)
        throw ConfigError("build_dirt: target boxes do not match dims");
    if (reference.dim() != d) throw ConfigError("build_dirt: reference dimension mismatch");
    if (!target.eval) throw ConfigError("build_dirt: target has no evaluator");

    const auto perm = block_permutation(dims);
    CountedTarget counted(target, perm);

    // layer-0 bases on the (internally ordered) original boxes
    std::vector<int> grid(d);
    if (opts.grid_layer0.size() == 1) grid.assign(d, opts.grid_layer0[0]);
    else if (opts.grid_layer0.size() == static_cast<std::size_t>(d)) grid = opts.grid_layer0;
    else if (opts.grid_layer0.empty()) grid.assign(d, 33);
    else throw ConfigError("build_dirt: grid_layer0 must have 1 or d entries");
    std::vector<Basis1D> bases0;
    for (int j = 0; j < d; ++j) {
        const int ext = perm[j];
        const Interval1D box = ext < dims.d_y ? target.y_box[ext] : target.theta_box[ext - dims.d_y];
        bases0.push_back(Basis1D::uniform(box, std::max(2, grid[ext])));
    }
    std::vector<Basis1D> bases_ref;
    for (int j = 0; j < d; ++j) bases_ref.push_back(Basis1D::uniform(reference.interval(), opts.ref_grid));

    DirtTransport dt;
    dt.reference_ = reference;
    dt.precond_ = std::move(precond);

    const auto ladder = schedule.ladder();
    double cur_beta = 0.0;
    int layer_idx = 0;
    for (;;) {
        if (layer_idx >= opts.max_layers)
            throw BuildError("build_dirt: temperature schedule did not reach beta = 1 within " +
                                 std::to_string(opts.max_layers) + " layers",
                             layer_idx);
        double beta;
        long adapt_evals = 0;
        if (schedule.kind == TemperingSchedule::Kind::adaptive) {
            if (layer_idx == 0) {
                beta = schedule.beta0;
            } else {
                const long before = counted.count();
                beta = next_beta_adaptive(dt.layers_, counted, reference, cur_beta, schedule.eta,
                                          schedule.n_adapt_samples, opts.seed + 7700 + layer_idx);
                adapt_evals = counted.count() - before;
            }
        } else {
            if (layer_idx >= static_cast<int>(ladder.size())) break;
            beta = ladder[layer_idx];
        }

        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<Basis1D>& bases = (layer_idx == 0) ? bases0 : bases_ref;
        const std::vector<SirtTransport>* stack = &dt.layers_;
        LogBatchOracle oracle;
        if (layer_idx == 0) {
            oracle = [&counted, beta](const Eigen::MatrixXd& pts) {
                Eigen::VectorXd lphi, lrho;
                counted.eval_internal(pts, lphi, lrho);
                return Eigen::VectorXd(0.5 * (beta * lphi + lrho));
            };
        } else {
            oracle = [&counted, stack, beta](const Eigen::MatrixXd& pts) {
                const Eigen::Index m = pts.cols();
                Eigen::MatrixXd xs(pts.rows(), m);
                Eigen::VectorXd logq(m);
                parallel_for(static_cast<std::size_t>(m), [&](std::size_t c) {
                    Eigen::VectorXd v = pts.col(static_cast<Eigen::Index>(c));
                    double acc = 0.0;
                    Eigen::VectorXd x;
                    for (int j = static_cast<int>(stack->size()) - 1; j >= 0; --j) {
                        acc += (*stack)[j].push_through(v, x);
                        v = x;
                    }
                    xs.col(static_cast<Eigen::Index>(c)) = v;
                    logq[static_cast<Eigen::Index>(c)] = acc;
                });
                Eigen::VectorXd lphi, lrho;
                counted.eval_internal(xs, lphi, lrho);
                return Eigen::VectorXd(0.5 * (beta * lphi + lrho - logq));
            };
        }

        const FunctionalTensorTrain* init = nullptr;
        if (layer_idx >= 1) {
            const auto& prev = dt.layers_.back().tt();
            bool same = prev.ndim() == d;
            for (int j = 0; same && j < d; ++j)
                same = prev.basis(j).nodes().size() == bases[j].nodes().size() &&
                       prev.basis(j).nodes() == bases[j].nodes();
            if (same) init = &prev;
        }

        CrossResult cr;
        try {
            cr = tt_cross(oracle, bases, dims, opts.cross, opts.seed + 1000 * (layer_idx + 1), init);
        } catch (const BuildError& e) {
            throw BuildError("layer " + std::to_string(layer_idx) + " cross failed: " + e.what(),
                             layer_idx);
        }

        LayerLog lg;
        lg.beta = beta;
        lg.cross_evals = cr.eval_count;
        lg.adapt_evals = adapt_evals;
        lg.achieved_error = cr.achieved_error;
        lg.ranks = cr.tt.ranks();
        lg.sweeps = cr.sweeps_done;

        dt.layers_.push_back(
            SirtTransport::build_relative_gamma(std::move(cr.tt), reference, opts.gamma_factor));
        dt.betas_.push_back(beta);

        if (opts.diag_samples > 0) {
            const long before = counted.count();
            Eigen::MatrixXd xs;
            Eigen::VectorXd logp, lphi, lrho;
            sample_stack(dt.layers_, reference, counted, opts.diag_samples,
                         opts.seed + 8800 + layer_idx, xs, logp, lphi, lrho);
            lg.hellinger = hellinger_from_samples(logp, beta * lphi + lrho);
            lg.diag_evals = counted.count() - before;
        }
        lg.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        dt.log_.push_back(std::move(lg));

        cur_beta = beta;
        ++layer_idx;
        if (cur_beta >= 1.0) break;
    }
    if (dt.layers_.empty() || dt.betas_.back() < 1.0)
        throw BuildError("build_dirt: empty or unfinished schedule");
    return dt;
}

long DirtTransport::total_evals() const {
    long t = 0;
    for (const auto& l : log_) t += l.cross_evals + l.diag_evals + l.adapt_evals;
    return t;
}

Eigen::VectorXd DirtTransport::forward(const Eigen::VectorXd& u_ref) const {
    Eigen::VectorXd v = u_ref;
    for (int j = static_cast<int>(layers_.size()) - 1; j >= 0; --j) v = layers_[j].transport(v);
    return v;
}

Eigen::VectorXd DirtTransport::inverse(const Eigen::VectorXd& x_internal) const {
    Eigen::VectorXd w = x_internal;
    for (const auto& layer : layers_) w = layer.transport_inverse(w);
    return w;
}

double DirtTransport::forward_with_logpdf(const Eigen::VectorXd& u_ref, Eigen::VectorXd& x_out) const {
    Eigen::VectorXd v = u_ref;
    double logq = 0.0;
    Eigen::VectorXd x;
    for (int j = static_cast<int>(layers_.size()) - 1; j >= 0; --j) {
        logq += layers_[j].push_through(v, x);
        v = x;
    }
    x_out = v;
    return reference_.logpdf(u_ref) + logq;
}

double DirtTransport::logpdf_internal(const Eigen::VectorXd& x_internal) const {
    double lp = layers_[0].logpdf(x_internal);
    Eigen::VectorXd w = layers_[0].transport_inverse(x_internal);
    for (std::size_t j = 1; j < layers_.size(); ++j) {
        lp += layers_[j].logpdf(w) - reference_.logpdf(w);
        w = layers_[j].transport_inverse(w);
    }
    return lp;
}

double DirtTransport::logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& theta) const {
    const Dims& dm = dims();
    Eigen::VectorXd x(dm.total());
    for (int j = 0; j < dm.d_y; ++j) x[j] = y[dm.d_y - 1 - j];
    x.tail(dm.d_theta) = theta;
    return logpdf_internal(x);
}

void DirtTransport::sample_joint(Rng& rng, Eigen::VectorXd& y, Eigen::VectorXd& theta) const {
    const Eigen::VectorXd x = forward(reference_.sample(rng));
    const Dims& dm = dims();
    y.resize(dm.d_y);
    for (int j = 0; j < dm.d_y; ++j) y[dm.d_y - 1 - j] = x[j];
    theta = x.tail(dm.d_theta);
}

DirtTransport::ConditionalContext DirtTransport::condition(const Eigen::VectorXd& y) const {
    const Dims& dm = dims();
    if (y.size() != dm.d_y) throw DomainError("condition: observation dimension mismatch");
    ConditionalContext ctx;
    Eigen::VectorXd w(dm.d_y);
    for (int j = 0; j < dm.d_y; ++j) w[j] = y[dm.d_y - 1 - j];
    for (std::size_t j = 0; j < layers_.size(); ++j) {
        auto st = layers_[j].push_y(w);
        ctx.log_marginal_y += layers_[j].log_marginal_y(st);
        if (j > 0) {
            double s = 0.0;
            for (int k = 0; k < dm.d_y; ++k) s += reference_.logpdf1(w[k]);
            ctx.log_marginal_y -= s;
        }
        if (j + 1 < layers_.size()) w = reference_.from_uniform(st.u_y);
        ctx.states.push_back(std::move(st));
    }
    return ctx;
}

Eigen::VectorXd DirtTransport::sample_conditional(const ConditionalContext& ctx,
                                                  const Eigen::VectorXd& v_theta) const {
    Eigen::VectorXd v = v_theta;
    for (int j = static_cast<int>(layers_.size()) - 1; j >= 0; --j)
        v = layers_[j].conditional_inverse(ctx.states[j], reference_.to_uniform(v));
    return v;
}

double DirtTransport::conditional_logpdf(const ConditionalContext& ctx,
                                         const Eigen::VectorXd& theta) const {
    Eigen::VectorXd w = theta;
    double lp = 0.0;
    for (std::size_t j = 0; j < layers_.size(); ++j) {
        Eigen::VectorXd u;
        const double lj = layers_[j].conditional_forward(ctx.states[j], w, &u);
        lp += lj - layers_[j].log_marginal_y(ctx.states[j]);
        if (j > 0) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < w.size(); ++k) s += reference_.logpdf1(w[k]);
            lp -= s;
        }
        if (j + 1 < layers_.size()) w = reference_.from_uniform(u);
    }
    return lp;
}

Eigen::VectorXd DirtTransport::observation_to_transport_space(const Eigen::VectorXd& y_raw) const {
    return precond_ ? precond_->apply_y(y_raw) : y_raw;
}

Eigen::VectorXd DirtTransport::lift_theta(const Eigen::VectorXd& theta) const {
    return precond_ ? precond_->unapply_theta(theta) : theta;
}

DirtTransport DirtTransport::from_parts(std::vector<SirtTransport> layers, std::vector<double> betas,
                                        ReferenceMeasure reference,
                                        std::optional<Preconditioner> precond,
                                        std::vector<LayerLog> log) {
    if (layers.empty() || layers.size() != betas.size())
        throw IoError("dirt transport: layer/beta count mismatch");
    for (std::size_t i = 1; i < betas.size(); ++i)
        if (!(betas[i] > betas[i - 1])) throw IoError("dirt transport: betas must increase");
    if (betas.back() != 1.0) throw IoError("dirt transport: final beta must be 1");
    DirtTransport dt;
    dt.layers_ = std::move(layers);
    dt.betas_ = std::move(betas);
    dt.reference_ = reference;
    dt.precond_ = std::move(precond);
    dt.log_ = std::move(log);
    return dt;
}

} // namespace dirt
