#include "helpers.hpp"
#include "iq/baselines.hpp"
#include "iq/error.hpp"
#include "iq/quad_rules.hpp"

#include <doctest.h>

#include <cmath>

using namespace iq;
using iqtest::scalar_cov;
using iqtest::vec;

TEST_CASE("Halton with the first point skipped") {
    const Eigen::MatrixXd u = halton_points(3, 1, vec({0.0}));
    CHECK(u(0, 0) == 0.25);
    CHECK(u(0, 1) == 0.75);
    CHECK(u(0, 2) == 0.125);
    CHECK(radical_inverse(5, 3) == doctest::Approx(2.0 / 3.0 + 1.0 / 9.0));
    const GaussianProposal q(vec({0}), scalar_cov(1));
    const PointSet ps = qmc_point_set(q, 3, vec({0.0}));
    CHECK(std::abs(ps.points(0, 0) - normal_quantile(0.25)) < 1e-15);
    CHECK(std::abs(ps.points(0, 2) - normal_quantile(0.125)) < 1e-15);
    CHECK(ps.quad_weights.sum() == doctest::Approx(1.0));
    const Eigen::MatrixXd off = halton_points(2, 1, vec({0.0}), 1);
    CHECK(off(0, 0) == 0.75);
    CHECK_THROWS_AS(halton_points(3, 21, Eigen::VectorXd::Zero(21)), ShapeError);
}

TEST_CASE("rotated Halton points stay inside the unit cube") {
    Rng rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd shift(5);
        for (int k = 0; k < 5; ++k) shift(k) = u(rng);
        const Eigen::MatrixXd pts = halton_points(500, 5, shift);
        CHECK(pts.minCoeff() > 0.0);
        CHECK(pts.maxCoeff() < 1.0);
    }
}

TEST_CASE("inverse normal CDF round trip") {
    const int n = 10000;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = 1e-8 + (1.0 - 2e-8) * i / (n - 1);
        worst = std::max(worst, std::abs(normal_cdf(normal_quantile(p)) - p));
    }
    CHECK(worst <= 1e-9);
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-13);
    CHECK(std::abs(normal_quantile(1e-10) + 6.361340902404056) < 1e-12);
}

TEST_CASE("IS with q equal to the normalized target") {
    const TargetDensity t = make_gaussian_target(1.0, 1.0);
    const GaussianProposal q(vec({1}), scalar_cov(1));
    const McEstimates e = is_estimate(t, q, identity_function(), 50, 3, t.log_z);
    CHECK(std::abs(e.estimates.z_hat - 1.0) < 1e-14);
    CHECK(e.samples == 50);
    CHECK(e.counts.target_evals == 50);
    const McEstimates a = is_estimate(t, q, identity_function(), 50, 3, t.log_z);
    CHECK(a.estimates.self_normalized == e.estimates.self_normalized);
    CHECK_THROWS_AS(is_estimate(t, q, identity_function(), 0, 3), ShapeError);
}

TEST_CASE("IS Z estimate is unbiased") {
    const TargetDensity t = rescaled(make_nakagami(0.0, 1.0, 2.0), 1.0);
    const GaussianProposal q(vec({0.3}), scalar_cov(2.0));
    const double z = std::exp(*t.log_z);
    const int reps = 10000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < reps; ++i) {
        const double zh = is_estimate(t, q, constant_function(), 10, static_cast<std::uint64_t>(i) + 1).estimates.z_hat;
        s += zh;
        s2 += zh * zh;
    }
    const double mean = s / reps;
    const double se = std::sqrt((s2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - z) < 3.0 * se);
}

TEST_CASE("toy 2 ordering at N = 5") {
    const TargetDensity t = make_gaussian_target(1.0, 1.0);
    const GaussianProposal q15(vec({1}), scalar_cov(1.5 * 1.5));
    const PointSet ps = map_to_gaussian_factor(tensor_grid(hermite_rule(5), 1), q15.mu(), q15.chol());
    const double igh_err = igh_estimate(igh_weights(ps, t, q15), identity_function()).self_normalized(0) - 1.0;
    double snis_mse = 0.0;
    for (int r = 1; r <= 200; ++r) {
        const double e = is_estimate(t, q15, identity_function(), 5, static_cast<std::uint64_t>(r)).estimates.self_normalized(0) - 1.0;
        snis_mse += e * e / 200.0;
    }
    CHECK(snis_mse >= 10.0 * igh_err * igh_err);

    for (double s : {1.0, 1.25, 1.5, 1.75, 2.0}) {
        CAPTURE(s);
        const GaussianProposal q(vec({1}), scalar_cov(s * s));
        const PointSet g = map_to_gaussian_factor(tensor_grid(hermite_rule(5), 1), q.mu(), q.chol());
        const double ig = igh_estimate(igh_weights(g, t, q), identity_function(), t.log_z).unnormalized->coeff(0) - 1.0;
        double is_mse = 0.0, qmc_mse = 0.0;
        for (int r = 1; r <= 200; ++r) {
            const double a = is_estimate(t, q, identity_function(), 5, static_cast<std::uint64_t>(r), t.log_z).estimates.unnormalized->coeff(0) - 1.0;
            const double b = qmc_is_estimate(t, q, identity_function(), 5, static_cast<std::uint64_t>(r), t.log_z).estimates.unnormalized->coeff(0) - 1.0;
            is_mse += a * a / 200.0;
            qmc_mse += b * b / 200.0;
        }
        CHECK(qmc_mse < is_mse);
        CHECK(ig * ig < qmc_mse);
    }
}

TEST_CASE("SNIS is scale invariant") {
    const TargetDensity t = make_gaussian_mixture_5();
    const TargetDensity tc = rescaled(t, 123.0);
    const GaussianProposal q(vec({0, 0}), 80.0 * Eigen::MatrixXd::Identity(2, 2));
    const McEstimates a = is_estimate(t, q, identity_function(), 400, 9);
    const McEstimates b = is_estimate(tc, q, identity_function(), 400, 9);
    CHECK((a.estimates.self_normalized - b.estimates.self_normalized).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(b.estimates.z_hat / a.estimates.z_hat - 123.0) < 1e-10);
}

TEST_CASE("AMIS with T = 1 is SNIS") {
    const TargetDensity t = make_nakagami(0.0, 1.0, 4.0);
    const GaussianProposal q(vec({0.5}), scalar_cov(2.0));
    AmisOptions o;
    o.samples = 64;
    o.iterations = 1;
    o.seed = 31;
    const AdaptTrace tr = amis(t, q.mu(), q.sigma(), o, power_function(2));
    const McEstimates e = is_estimate(t, q, power_function(2), 64, 31);
    CHECK(std::abs(tr.last().cumulative.self_normalized(0) - e.estimates.self_normalized(0)) < 1e-12);
    CHECK(std::abs(tr.last().cumulative.z_hat - e.estimates.z_hat) < 1e-12 * e.estimates.z_hat);
}

TEST_CASE("AMIS on a Gaussian target") {
    const Eigen::VectorXd mu = vec({1.0, -0.5});
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 0.4, 0.4, 2.0;
    const TargetDensity t = make_gaussian_target(mu, s);
    const int runs = 50;
    Eigen::MatrixXd est(2, runs);
    for (int r = 0; r < runs; ++r) {
        AmisOptions o;
        o.samples = 200;
        o.iterations = 10;
        o.seed = 500 + static_cast<std::uint64_t>(r);
        est.col(r) = amis(t, mu + vec({0.5, 0.5}), 2.0 * s, o, identity_function()).last().cumulative.self_normalized;
    }
    const Eigen::VectorXd avg = est.rowwise().mean();
    for (int k = 0; k < 2; ++k) {
        const double sd = std::sqrt((est.row(k).array() - avg(k)).square().sum() / (runs - 1));
        CHECK(std::abs(avg(k) - mu(k)) < 3.0 * sd / std::sqrt(static_cast<double>(runs)));
    }
    AmisOptions o;
    o.samples = 30;
    o.iterations = 5;
    const AdaptTrace tr = amis(t, mu, s, o, identity_function());
    CHECK(tr.last().counts.target_evals == 150);
    CHECK(tr.last().counts.denominator_evals == 30 * 15);
}

TEST_CASE("M-PMC with M = 1 and T = 1 is SNIS") {
    const TargetDensity t = make_nakagami(0.0, 1.0, 4.0);
    const GaussianProposal q(vec({0.2}), scalar_cov(1.7));
    for (bool adapt : {false, true}) {
        MpmcOptions o;
        o.samples = 40;
        o.iterations = 1;
        o.seed = 12;
        o.adapt_weights = adapt;
        const AdaptTrace tr = m_pmc(t, {{q.mu(), q.sigma()}}, o, power_function(2));
        if (!adapt) {
            const McEstimates e = is_estimate(t, q, power_function(2), 40, 12);
            CHECK(std::abs(tr.last().current.self_normalized(0) - e.estimates.self_normalized(0)) < 1e-12);
        }
        // the weight-adapting variant draws component indices too, so only the estimator form is shared
        CHECK(std::isfinite(tr.last().current.self_normalized(0)));
        CHECK(tr.last().counts.target_evals == 40);
    }
}

TEST_CASE("weight-adapting M-PMC keeps a normalized mixture") {
    const TargetDensity t = make_gaussian_mixture_5();
    std::vector<KernelInit> inits;
    Rng rng(3);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int m = 0; m < 8; ++m) inits.push_back({vec({u(rng), u(rng)}), 25.0 * Eigen::MatrixXd::Identity(2, 2)});
    MpmcOptions o;
    o.samples = 25;
    o.iterations = 6;
    o.seed = 4;
    o.adapt_weights = true;
    const AdaptTrace a = m_pmc(t, inits, o, identity_function());
    const AdaptTrace b = m_pmc(t, inits, o, identity_function());
    for (const auto& rec : a.iterations) {
        CHECK(rec.kernel_weights.size() == 8);
        CHECK(std::abs(rec.kernel_weights.sum() - 1.0) < 1e-12);
        CHECK((rec.kernel_weights.array() >= 0.0).all());
    }
    CHECK(a.last().current.self_normalized == b.last().current.self_normalized);
    CHECK(a.last().counts.target_evals == 8 * 25 * 6);
    CHECK(a.last().counts.proposal_evals == 8 * 8 * 25 * 6);
}

TEST_CASE("sampling baselines are bit-reproducible per seed") {
    const TargetDensity t = make_gaussian_mixture_5();
    const GaussianProposal q(vec({0, 0}), 60.0 * Eigen::MatrixXd::Identity(2, 2));
    CHECK(qmc_is_estimate(t, q, identity_function(), 100, 5).estimates.self_normalized ==
          qmc_is_estimate(t, q, identity_function(), 100, 5).estimates.self_normalized);
    MpmcOptions o;
    o.seed = 6;
    const std::vector<KernelInit> inits{{vec({0, 0}), 30.0 * Eigen::MatrixXd::Identity(2, 2)}, {vec({5, 5}), 30.0 * Eigen::MatrixXd::Identity(2, 2)}};
    CHECK(m_pmc(t, inits, o, identity_function()).last().current.self_normalized ==
          m_pmc(t, inits, o, identity_function()).last().current.self_normalized);
}
