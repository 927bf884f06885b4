#include "dirt/conditional_diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "dirt/parallel.hpp"

namespace dirt {

HellingerEstimate conditional_hellinger(const DirtTransport& transport, const TargetDensity& target,
                                        const Eigen::VectorXd& y, int n_samples, std::uint64_t seed,
                                        Eigen::MatrixXd* samples_out, Eigen::VectorXd* logp_out) {
    const auto ctx = transport.condition(transport.observation_to_transport_space(y));
    const int dt = transport.dims().d_theta;
    auto rng = make_rng(seed, 0xc0d1);
    Eigen::MatrixXd vs(dt, n_samples);
    const auto& ref = transport.reference();
    for (int i = 0; i < n_samples; ++i)
        for (int k = 0; k < dt; ++k) vs(k, i) = ref.invcdf1(uniform01(rng));

    Eigen::MatrixXd thetas(dt, n_samples);
    Eigen::VectorXd logp(n_samples), logpi(n_samples);
    parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
        const Eigen::Index c = static_cast<Eigen::Index>(i);
        const Eigen::VectorXd th = transport.sample_conditional(ctx, vs.col(c));
        thetas.col(c) = th;
        logp[c] = transport.conditional_logpdf(ctx, th);
        logpi[c] = target.log_joint(y, transport.lift_theta(th));
    });
    if (samples_out) {
        samples_out->resize(transport.lift_theta(thetas.col(0)).size(), n_samples);
        for (int i = 0; i < n_samples; ++i) samples_out->col(i) = transport.lift_theta(thetas.col(i));
    }
    if (logp_out) *logp_out = logp;
    return hellinger_from_samples(logp, logpi);
}

ConditionalErrorResult conditional_error_histogram(const DirtTransport& transport,
                                                   const TargetDensity& target,
                                                   const std::vector<Eigen::VectorXd>& y_values,
                                                   int n_per_y, std::uint64_t seed) {
    ConditionalErrorResult res;
    res.per_y.reserve(y_values.size());
    for (std::size_t i = 0; i < y_values.size(); ++i)
        res.per_y.push_back(
            conditional_hellinger(transport, target, y_values[i], n_per_y, seed + 31 * i));

    std::vector<double> vals;
    double se2 = 0.0;
    for (const auto& h : res.per_y) {
        vals.push_back(h.value);
        res.mean += h.value;
        se2 += h.std_error * h.std_error;
    }
    res.mean /= std::max<std::size_t>(1, vals.size());
    res.pooled_se = std::sqrt(se2) / std::max<std::size_t>(1, vals.size());
    std::sort(vals.begin(), vals.end());
    auto quant = [&](double q) {
        if (vals.empty()) return 0.0;
        const double pos = q * (vals.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, vals.size() - 1);
        return vals[lo] + (pos - lo) * (vals[hi] - vals[lo]);
    };
    res.q25 = quant(0.25);
    res.median = quant(0.5);
    res.q75 = quant(0.75);
    return res;
}

HellingerEstimate joint_hellinger(const DirtTransport& transport, const TargetDensity& target,
                                  int n_samples, std::uint64_t seed) {
    const int d = transport.ndim();
    auto rng = make_rng(seed, 0x901e);
    Eigen::MatrixXd us(d, n_samples);
    for (int i = 0; i < n_samples; ++i) us.col(i) = transport.reference().sample(rng);
    Eigen::VectorXd logp(n_samples), logpi(n_samples);
    const Dims dims = transport.dims();
    parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
        const Eigen::Index c = static_cast<Eigen::Index>(i);
        Eigen::VectorXd x;
        logp[c] = transport.forward_with_logpdf(us.col(c), x);
        Eigen::VectorXd y(dims.d_y);
        for (int j = 0; j < dims.d_y; ++j) y[dims.d_y - 1 - j] = x[j];
        const Eigen::VectorXd th = x.tail(dims.d_theta);
        if (transport.precond()) {
            logpi[c] = target.log_joint(transport.precond()->unapply_y(y), transport.lift_theta(th));
        } else {
            logpi[c] = target.log_joint(y, th);
        }
    });
    return hellinger_from_samples(logp, logpi);
}

} // namespace dirt
