#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dirt/cross.hpp"
#include "dirt/errors.hpp"
#include "dirt/rng.hpp"
#include "dirt/sirt.hpp"
#include "dirt/stats.hpp"
#include "quadrature.hpp"

using namespace dirt;

namespace {

FunctionalTensorTrain random_tt(const std::vector<int>& ranks, const std::vector<int>& nodes,
                                Dims dims, const std::vector<Interval1D>& boxes,
                                std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<TTCore> cores;
    std::vector<Basis1D> bases;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        TTCore c;
        for (int i = 0; i < nodes[k]; ++i) {
            Eigen::MatrixXd s(ranks[k], ranks[k + 1]);
            for (int a = 0; a < s.size(); ++a) s.data()[a] = gauss(rng);
            c.slice.push_back(s);
        }
        cores.push_back(std::move(c));
        bases.push_back(Basis1D::uniform(boxes[k], nodes[k]));
    }
    return FunctionalTensorTrain(std::move(cores), std::move(bases), dims);
}

FunctionalTensorTrain constant_tt(int d, const Interval1D& box, int nodes, Dims dims) {
    std::vector<TTCore> cores(d);
    std::vector<Basis1D> bases;
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < nodes; ++i) cores[k].slice.push_back(Eigen::MatrixXd::Ones(1, 1));
        bases.push_back(Basis1D::uniform(box, nodes));
    }
    return FunctionalTensorTrain(std::move(cores), std::move(bases), dims);
}

// single layer built from a plain density via cross
SirtTransport sirt_of(const std::function<double(const Eigen::VectorXd&)>& density,
                      const std::vector<Interval1D>& boxes, Dims dims, int nodes, int rank,
                      std::uint64_t seed, double gamma = 0.0) {
    LogBatchOracle oracle = [&](const Eigen::MatrixXd& pts) {
        Eigen::VectorXd v(pts.cols());
        for (Eigen::Index i = 0; i < pts.cols(); ++i) v[i] = 0.5 * std::log(density(pts.col(i)));
        return v;
    };
    std::vector<Basis1D> bases;
    for (std::size_t k = 0; k < boxes.size(); ++k) bases.push_back(Basis1D::uniform(boxes[k], nodes));
    CrossConfig cfg;
    cfg.init_rank = std::min(4, rank);
    cfg.max_rank = rank;
    cfg.tolerance = 1e-8;
    cfg.max_sweeps = 8;
    cfg.enrichment = 2;
    auto res = tt_cross(oracle, bases, dims, cfg, seed);
    return SirtTransport::build(std::move(res.tt), ReferenceMeasure::truncated_gaussian(dims.total(), 3.0),
                                gamma);
}

double corr_gauss_density(const Eigen::VectorXd& x, double rho) {
    const double q = (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / (1.0 - rho * rho);
    return std::exp(-0.5 * q);
}

} // namespace

TEST_CASE("constant density marginalizes to z=1 with unit marginals") {
    auto tt = constant_tt(3, {0.0, 1.0}, 5, {0, 3});
    const auto s = SirtTransport::build(std::move(tt), ReferenceMeasure::uniform(3), 0.0);
    CHECK(s.norm_constant() == doctest::Approx(1.0).epsilon(1e-13));
    auto rng = make_rng(3);
    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd x(3);
        for (int k = 0; k < 3; ++k) x[k] = uniform01(rng);
        CHECK(s.logpdf(x) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::exp(s.log_marginal_unnorm(x.head(2))) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("normalizing constant equals dense quadrature of g^2") {
    const std::vector<Interval1D> boxes{{0.0, 2.0}, {-1.0, 1.0}, {0.5, 3.0}};
    auto tt = random_tt({1, 2, 2, 1}, {6, 5, 7}, {0, 3}, boxes, 77);
    const auto s = SirtTransport::build(tt, ReferenceMeasure::uniform(3), 0.0);
    const double q = testq::tensor_gauss(
        [&](const Eigen::VectorXd& x) {
            const double g = tt.eval(x);
            return g * g;
        },
        {0.0, -1.0, 0.5}, {2.0, 1.0, 3.0}, {5, 4, 6});
    CHECK(std::abs(s.tt_norm_constant() - q) <= 1e-10 * q);
}

TEST_CASE("marginals equal quadrature over the trailing coordinate") {
    const std::vector<Interval1D> boxes{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
    auto tt = random_tt({1, 2, 2, 1}, {5, 5, 5}, {0, 3}, boxes, 101);
    const auto s = SirtTransport::build(tt, ReferenceMeasure::uniform(3), 0.0);
    auto rng = make_rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd p2(2);
        p2 << uniform01(rng), uniform01(rng);
        const double q = testq::gauss5_composite(
            [&](double t) {
                Eigen::VectorXd x(3);
                x << p2[0], p2[1], t;
                const double g = tt.eval(x);
                return g * g;
            },
            0.0, 1.0, 4);
        const double m = std::exp(s.log_marginal_unnorm(p2));
        CHECK(std::abs(m - q) <= 1e-9 * std::max(q, 1e-30));
    }
}

TEST_CASE("marginalization consistency along every level") {
    const std::vector<Interval1D> boxes{{0.0, 1.0}, {0.0, 2.0}, {-1.0, 1.0}, {0.0, 1.0}};
    auto tt = random_tt({1, 3, 2, 2, 1}, {4, 5, 4, 5}, {0, 4}, boxes, 131);
    const auto s = SirtTransport::build(tt, ReferenceMeasure::uniform(4), 1e-7);
    auto rng = make_rng(7);
    for (int k = 1; k < 4; ++k) {
        for (int rep = 0; rep < 10; ++rep) {
            Eigen::VectorXd pre(k);
            for (int j = 0; j < k; ++j)
                pre[j] = boxes[j].lo + uniform01(rng) * boxes[j].length();
            const double direct = std::exp(s.log_marginal_unnorm(pre));
            const double integrated = testq::gauss5_composite(
                [&](double t) {
                    Eigen::VectorXd xt(k + 1);
                    xt.head(k) = pre;
                    xt[k] = t;
                    return std::exp(s.log_marginal_unnorm(xt));
                },
                boxes[k].lo, boxes[k].hi, 2 * (s.tt().basis(k).size() - 1));
            CHECK(std::abs(direct - integrated) <= 1e-9 * std::max(direct, 1e-30));
        }
    }
}

TEST_CASE("joint pdf integrates to one and respects the gamma floor") {
    const std::vector<Interval1D> boxes{{0.0, 1.0}, {0.0, 1.0}};
    auto tt = random_tt({1, 3, 1}, {7, 7}, {0, 2}, boxes, 151);
    const double gamma = 1e-3;
    const auto s = SirtTransport::build(tt, ReferenceMeasure::uniform(2), gamma);
    const double mass = testq::tensor_gauss(
        [&](const Eigen::VectorXd& x) { return s.pdf(x); }, {0.0, 0.0}, {1.0, 1.0}, {6, 6});
    CHECK(std::abs(mass - 1.0) <= 1e-9);
    const double floor = gamma / s.norm_constant();
    auto rng = make_rng(11);
    for (int i = 0; i < 10000; ++i) {
        Eigen::VectorXd x(2);
        x << uniform01(rng), uniform01(rng);
        CHECK(s.pdf(x) >= floor * (1.0 - 1e-12));
    }
}

TEST_CASE("uniform density gives an affine Rosenblatt map") {
    auto tt = constant_tt(2, {2.0, 6.0}, 4, {0, 2});
    const auto s = SirtTransport::build(std::move(tt), ReferenceMeasure::uniform(2), 0.0);
    auto rng = make_rng(13);
    for (int i = 0; i < 25; ++i) {
        Eigen::VectorXd x(2);
        x << 2.0 + 4.0 * uniform01(rng), 2.0 + 4.0 * uniform01(rng);
        const Eigen::VectorXd u = s.rosenblatt_forward(x);
        CHECK(u[0] == doctest::Approx((x[0] - 2.0) / 4.0).epsilon(1e-12));
        CHECK(u[1] == doctest::Approx((x[1] - 2.0) / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("forward-inverse roundtrip to 1e-8") {
    const std::vector<Interval1D> boxes{{-3.0, 3.0}, {-3.0, 3.0}};
    const auto s = sirt_of([](const Eigen::VectorXd& x) { return corr_gauss_density(x, 0.6); },
                           boxes, {0, 2}, 35, 12, 311);
    auto rng = make_rng(17);
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd u(2);
        u << uniform01(rng), uniform01(rng);
        const Eigen::VectorXd x = s.rosenblatt_inverse(u);
        const Eigen::VectorXd u2 = s.rosenblatt_forward(x);
        CHECK((u2 - u).cwiseAbs().maxCoeff() <= 1e-8);
        const Eigen::VectorXd x2 = s.rosenblatt_inverse(u2);
        CHECK((x2 - x).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("pushforward uniformity: KS on marginals, chi-square on the pair") {
    const std::vector<Interval1D> boxes{{-3.0, 3.0}, {-3.0, 3.0}};
    const auto s = sirt_of([](const Eigen::VectorXd& x) { return corr_gauss_density(x, 0.5); },
                           boxes, {0, 2}, 35, 12, 331);
    auto rng = make_rng(19);
    const int n = 10000;
    std::vector<double> u0(n), u1(n);
    Eigen::MatrixXi bins = Eigen::MatrixXi::Zero(10, 10);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd u(2);
        u << uniform01(rng), uniform01(rng);
        const Eigen::VectorXd x = s.rosenblatt_inverse(u);
        const Eigen::VectorXd v = s.rosenblatt_forward(x);
        u0[i] = v[0];
        u1[i] = v[1];
        const int bi = std::min(9, static_cast<int>(v[0] * 10.0));
        const int bj = std::min(9, static_cast<int>(v[1] * 10.0));
        bins(bi, bj)++;
    }
    CHECK(ks_statistic_uniform(u0) < ks_critical(n, 0.01));
    CHECK(ks_statistic_uniform(u1) < ks_critical(n, 0.01));
    const double expect = n / 100.0;
    double chi2 = 0.0;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
            const double d = bins(i, j) - expect;
            chi2 += d * d / expect;
        }
    CHECK(chi2 < chi2_99dof_crit_99());
}

TEST_CASE("median of a symmetric product density maps to the center") {
    const auto s = sirt_of(
        [](const Eigen::VectorXd& x) {
            return std::exp(-0.5 * x[0] * x[0]) * std::exp(-0.5 * x[1] * x[1]);
        },
        {{-2.0, 2.0}, {-2.0, 2.0}}, {0, 2}, 41, 6, 351);
    Eigen::VectorXd u(2);
    u << 0.5, 0.5;
    const Eigen::VectorXd x = s.rosenblatt_inverse(u);
    CHECK(std::abs(x[0]) <= 1e-9);
    CHECK(std::abs(x[1]) <= 1e-9);
}

TEST_CASE("sampled covariance matches the Gaussian target") {
    const double rho = 0.5;
    const auto s = sirt_of([&](const Eigen::VectorXd& x) { return corr_gauss_density(x, rho); },
                           {{-4.0, 4.0}, {-4.0, 4.0}}, {0, 2}, 41, 14, 371);
    auto rng = make_rng(23);
    const int n = 100000;
    double m0 = 0, m1 = 0, c00 = 0, c01 = 0, c11 = 0;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd u(2);
        u << uniform01(rng), uniform01(rng);
        const Eigen::VectorXd x = s.rosenblatt_inverse(u);
        m0 += x[0]; m1 += x[1];
        c00 += x[0] * x[0]; c01 += x[0] * x[1]; c11 += x[1] * x[1];
    }
    m0 /= n; m1 /= n; c00 = c00 / n - m0 * m0; c01 = c01 / n - m0 * m1; c11 = c11 / n - m1 * m1;
    CHECK(std::abs(c00 - 1.0) <= 0.02);
    CHECK(std::abs(c11 - 1.0) <= 0.02);
    CHECK(std::abs(c01 - rho) <= 0.02);
}

TEST_CASE("transport is lower triangular (finite-difference probe)") {
    const auto s = sirt_of([](const Eigen::VectorXd& x) { return corr_gauss_density(x, 0.4) *
                                                                 (1.0 + 0.2 * std::sin(x[2])); },
                           {{-3.0, 3.0}, {-3.0, 3.0}, {-3.0, 3.0}}, {0, 3}, 21, 10, 391);
    auto rng = make_rng(29);
    const double h = 1e-5;
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd v(3);
        for (int k = 0; k < 3; ++k) v[k] = -2.0 + 4.0 * uniform01(rng);
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                Eigen::VectorXd vp = v, vm = v;
                vp[j] += h;
                vm[j] -= h;
                const double di = (s.transport(vp)[i] - s.transport(vm)[i]) / (2.0 * h);
                CHECK(std::abs(di) <= 1e-8 * 6.0); // scale: domain width
            }
    }
}

TEST_CASE("conditional of an independent joint ignores the observation") {
    // d_y = 1, d_theta = 1, independent blocks
    const auto s = sirt_of(
        [](const Eigen::VectorXd& x) {
            return std::exp(-0.5 * x[0] * x[0]) * (1.0 + 0.5 * std::cos(x[1]));
        },
        {{-3.0, 3.0}, {-3.0, 3.0}}, {1, 1}, 31, 8, 411);
    Eigen::VectorXd y1(1), y2(1), u(1);
    y1 << -1.3;
    y2 << 2.1;
    u << 0.37;
    const auto st1 = s.push_y(y1);
    const auto st2 = s.push_y(y2);
    const double t1 = s.conditional_inverse(st1, u)[0];
    const double t2 = s.conditional_inverse(st2, u)[0];
    CHECK(t1 == doctest::Approx(t2).epsilon(1e-9));
}

TEST_CASE("conditional mean matches the bivariate Gaussian closed form") {
    const double rho = 0.6;
    const auto s = sirt_of([&](const Eigen::VectorXd& x) { return corr_gauss_density(x, rho); },
                           {{-4.0, 4.0}, {-4.0, 4.0}}, {1, 1}, 41, 14, 431);
    auto rng = make_rng(31);
    for (double yv : {-1.0, 0.0, 1.5}) {
        Eigen::VectorXd y(1);
        y << yv;
        const auto st = s.push_y(y);
        const int n = 20000;
        double mean = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd u(1);
            u << uniform01(rng);
            const double t = s.conditional_inverse(st, u)[0];
            mean += t;
            sq += t * t;
        }
        mean /= n;
        const double sd = std::sqrt((sq / n - mean * mean) / n);
        CHECK(std::abs(mean - rho * yv) <= 3.0 * sd + 5e-3);
    }
}

TEST_CASE("conditional map reuses the cached prefix") {
    const auto s = sirt_of([](const Eigen::VectorXd& x) { return corr_gauss_density(x, 0.3); },
                           {{-3.0, 3.0}, {-3.0, 3.0}}, {1, 1}, 21, 8, 451);
    Eigen::VectorXd y(1), v(1);
    y << 0.7;
    v << 0.1;
    const Eigen::VectorXd a = s.conditional_map(y, v);
    const Eigen::VectorXd b = s.conditional_map(y, v); // memoized path
    CHECK(a[0] == b[0]);
    const auto st = s.push_y(y);
    const Eigen::VectorXd c = s.conditional_inverse(st, s.reference().to_uniform(v));
    CHECK(a[0] == doctest::Approx(c[0]).epsilon(1e-14));
}

TEST_CASE("pullback of the layer's own density is the reference") {
    const auto s = sirt_of([](const Eigen::VectorXd& x) { return corr_gauss_density(x, 0.5); },
                           {{-3.0, 3.0}, {-3.0, 3.0}}, {0, 2}, 31, 10, 471);
    auto log_p = [&](const Eigen::VectorXd& x) { return s.logpdf(x); };
    auto rng = make_rng(37);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd v(2);
        v << -3.0 + 6.0 * uniform01(rng), -3.0 + 6.0 * uniform01(rng);
        CHECK(s.pullback_logpdf(log_p, v) ==
              doctest::Approx(s.reference().logpdf(v)).epsilon(1e-9));
    }
}

TEST_CASE("transport Jacobian determinant matches the density ratio") {
    const auto s = sirt_of([](const Eigen::VectorXd& x) { return corr_gauss_density(x, 0.45); },
                           {{-3.0, 3.0}, {-3.0, 3.0}}, {0, 2}, 41, 10, 491);
    auto rng = make_rng(41);
    const double h = 1e-5;
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd v(2);
        v << -2.0 + 4.0 * uniform01(rng), -2.0 + 4.0 * uniform01(rng);
        // lower-triangular Jacobian: determinant is the product of diagonals
        double logdet = 0.0;
        for (int i = 0; i < 2; ++i) {
            Eigen::VectorXd vp = v, vm = v;
            vp[i] += h;
            vm[i] -= h;
            logdet += std::log((s.transport(vp)[i] - s.transport(vm)[i]) / (2.0 * h));
        }
        const Eigen::VectorXd x = s.transport(v);
        const double expected = s.reference().logpdf(v) - s.logpdf(x);
        CHECK(std::abs(logdet - expected) <= 1e-4);
    }
}

TEST_CASE("pullback density of a smooth external target is normalized") {
    const auto s = sirt_of([](const Eigen::VectorXd& x) { return corr_gauss_density(x, 0.5); },
                           {{-3.0, 3.0}, {-3.0, 3.0}}, {0, 2}, 41, 12, 511);
    // target: a shifted Gaussian on the same box, normalized by quadrature
    auto target = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd c(2);
        c << x[0] - 0.4, x[1] + 0.3;
        return corr_gauss_density(c, 0.2);
    };
    const double z = testq::tensor_gauss(target, {-3.0, -3.0}, {3.0, 3.0}, {40, 40});
    auto log_target = [&](const Eigen::VectorXd& x) { return std::log(target(x) / z); };
    const double mass = testq::tensor_gauss(
        [&](const Eigen::VectorXd& v) { return std::exp(s.pullback_logpdf(log_target, v)); },
        {-3.0, -3.0}, {3.0, 3.0}, {60, 60});
    CHECK(std::abs(mass - 1.0) <= 1e-3);
}

TEST_CASE("Hellinger distance is controlled by the L2 error of g") {
    // one representative target; the acceptance suite sweeps ten of them
    auto density = [](const Eigen::VectorXd& x) {
        return corr_gauss_density(x, 0.55) +
               0.4 * std::exp(-((x[0] - 1.0) * (x[0] - 1.0) + (x[1] + 0.8) * (x[1] + 0.8)));
    };
    const std::vector<Interval1D> boxes{{-3.5, 3.5}, {-3.5, 3.5}};
    const auto s = sirt_of(density, boxes, {0, 2}, 41, 12, 531);
    const double zpi = testq::tensor_gauss(density, {-3.5, -3.5}, {3.5, 3.5}, {50, 50});
    // D_H^2 = 1/2 int (sqrt(pi) - sqrt(p))^2 with both sides normalized
    const double d2 = 0.5 * testq::tensor_gauss(
                                [&](const Eigen::VectorXd& x) {
                                    const double a = std::sqrt(density(x) / zpi);
                                    const double b = std::sqrt(s.pdf(x));
                                    return (a - b) * (a - b);
                                },
                                {-3.5, -3.5}, {3.5, 3.5}, {50, 50});
    // the unnormalized approximation of sqrt(pi) is g / sqrt(z_pi)
    const double l2 = std::sqrt(testq::tensor_gauss(
        [&](const Eigen::VectorXd& x) {
            const double e = (std::sqrt(density(x)) - s.tt().eval(x)) / std::sqrt(zpi);
            return e * e;
        },
        {-3.5, -3.5}, {3.5, 3.5}, {50, 50}));
    CHECK(std::sqrt(d2) <= std::sqrt(2.0) * l2 + 1e-12);
}
