#include "helpers.hpp"
#include "iq/error.hpp"
#include "iq/igh.hpp"
#include "iq/quad_rules.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace iq;
using iqtest::scalar_cov;
using iqtest::vec;

namespace {

PointSet grid_for(const GaussianProposal& q, int alpha) {
    return map_to_gaussian_factor(tensor_grid(hermite_rule(alpha), q.dim()), q.mu(), q.chol());
}

}  // namespace

TEST_CASE("perfect match gives constant weights") {
    Eigen::MatrixXd s(2, 2);
    s << 1.5, 0.4, 0.4, 0.7;
    const GaussianProposal q(vec({1, 2}), s);
    const TargetDensity t = rescaled(make_gaussian_target(q.mu(), s), 3.25);
    const WeightedSet ws = igh_weights(grid_for(q, 4), t, q);
    CHECK((ws.is_weights.array() - 3.25).abs().maxCoeff() < 1e-12);
    CHECK((ws.combined - (ws.is_weights.array() * ws.quad_weights.array() * 16.0).matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(ws.normalized.sum() - 1.0) < 1e-12);
    CHECK(ws.counts.target_evals == 16);
    CHECK(ws.counts.proposal_evals == 16);
}

TEST_CASE("toy 1 weights cancel the exponential") {
    const GaussianProposal q(vec({0}), scalar_cov(1));
    const TargetDensity t = make_nakagami(0.0, 1.0, 4.0);
    const PointSet ps = grid_for(q, 5);
    const WeightedSet ws = igh_weights(ps, t, q);
    const double c = std::sqrt(2.0 * std::numbers::pi);
    for (Eigen::Index n = 0; n < ps.size(); ++n) {
        const double x4 = std::pow(ps.points(0, n), 4);
        CHECK(std::abs(ws.is_weights(n) - c * x4) < 1e-12 * std::max(1.0, x4));
    }
}

TEST_CASE("toy 1 zero-error band and Z") {
    const GaussianProposal q(vec({0}), scalar_cov(1));
    const TargetDensity t = make_nakagami(0.0, 1.0, 4.0);
    const WeightedSet ws = igh_weights(grid_for(q, 5), t, q);
    for (int p : {2, 4, 6, 8, 10}) {
        const Estimates e = igh_estimate(ws, power_function(p), t.log_z);
        const double truth = t.true_moment_oracle(p);
        const double rel = std::abs((*e.unnormalized)(0) - truth) / truth;
        CAPTURE(p);
        if (p <= 4) CHECK(rel < 1e-10);
        else CHECK(rel > 1e-4);
    }
    const Estimates e = igh_estimate(ws, constant_function(), t.log_z);
    CHECK(std::abs(e.z_hat / std::exp(*t.log_z) - 1.0) < 1e-10);
}

TEST_CASE("support indicator gives zero weight and all-zero weights raise") {
    TargetDensity box;
    box.name = "box";
    box.dim = 1;
    box.log_unnorm = [](const Eigen::VectorXd& x) {
        return std::abs(x(0)) <= 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    };
    const GaussianProposal q(vec({0}), scalar_cov(1));
    const WeightedSet ws = igh_weights(grid_for(q, 5), box, q);
    const PointSet ps = grid_for(q, 5);
    for (Eigen::Index n = 0; n < ps.size(); ++n) {
        if (std::abs(ps.points(0, n)) > 1.0) CHECK(ws.combined(n) == 0.0);
        else CHECK(ws.combined(n) > 0.0);
    }
    const GaussianProposal far(vec({50}), scalar_cov(1));
    CHECK_THROWS_AS(igh_weights(grid_for(far, 5), box, far), DegenerateWeightsError);
}

TEST_CASE("self-normalized estimate is exact when q is the target") {
    Eigen::MatrixXd s(2, 2);
    s << 2.0, 0.3, 0.3, 1.0;
    const Eigen::VectorXd mu = vec({-1, 4});
    const GaussianProposal q(mu, s);
    const TargetDensity t = make_gaussian_target(mu, s);
    for (int a = 1; a <= 4; ++a) {
        const Estimates e = igh_estimate(igh_weights(grid_for(q, a), t, q), identity_function(), t.log_z);
        CHECK((e.self_normalized - mu).cwiseAbs().maxCoeff() < 1e-12);
    }
    const GaussianProposal q1(vec({1}), scalar_cov(1));
    const TargetDensity t1 = make_gaussian_target(1.0, 1.0);
    for (int a = 2; a <= 6; ++a)
        for (int p = 0; p <= 2 * a - 1; ++p) {
            const Estimates e = igh_estimate(igh_weights(grid_for(q1, a), t1, q1), power_function(p));
            const double m = iqtest::gaussian_moment(p, 1.0, 1.0);
            CHECK(std::abs(e.self_normalized(0) - m) < 1e-9 * std::max(1.0, m));
        }
}

TEST_CASE("proposition 1: q proportional to f pi gives zero error at alpha = 1") {
    const double c = 17.0;
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 0.2, 0.2, 3.0;
    const Eigen::VectorXd mu = vec({0.5, -2});
    const TargetDensity t = rescaled(make_gaussian_target(mu, s), c);
    const GaussianProposal q(mu, s);
    const Estimates e = igh_estimate(igh_weights(grid_for(q, 1), t, q), constant_function(), t.log_z);
    CHECK(std::abs((*e.unnormalized)(0) - 1.0) < 1e-12);
    CHECK(std::abs(e.z_hat - c) < 1e-12 * c);
}

TEST_CASE("target rescaling invariance") {
    const TargetDensity t = make_nakagami(0.0, 1.0, 4.0);
    const GaussianProposal q(vec({0.3}), scalar_cov(2.0));
    for (double c : {1e-3, 0.5, 42.0, 1e6}) {
        const TargetDensity tc = rescaled(t, c);
        const Estimates a = igh_estimate(igh_weights(grid_for(q, 7), t, q), power_function(2));
        const Estimates b = igh_estimate(igh_weights(grid_for(q, 7), tc, q), power_function(2));
        CHECK(std::abs(a.self_normalized(0) - b.self_normalized(0)) < 1e-12 * std::abs(a.self_normalized(0)));
        CHECK(std::abs(a.ess_igh - b.ess_igh) < 1e-12 * a.ess_igh);
        CHECK(std::abs(b.z_hat / a.z_hat - c) < 1e-12 * c);
    }
}

TEST_CASE("Z error on the Nakagami target with a wide proposal") {
    // q = N(0, 2^2). Reference errors from an independent Gauss-Hermite evaluation
    // (numpy hermgauss). The error is not monotone in alpha on this grid.
    const TargetDensity t = make_nakagami(0.0, 1.0, 4.0);
    const GaussianProposal q(vec({0}), scalar_cov(4.0));
    const double z = std::exp(*t.log_z);
    const std::vector<std::pair<int, double>> expected{{3, 0.6445121107762459}, {5, 0.016211049569886674},
                                                       {9, 0.21773530493156174}, {15, 0.04237733622930104},
                                                       {21, 0.004438604090419815}, {31, 6.45220108358127e-05}};
    for (const auto& [a, ref] : expected) {
        CAPTURE(a);
        const double err = std::abs(igh_estimate(igh_weights(grid_for(q, a), t, q), constant_function()).z_hat - z) / z;
        CHECK(std::abs(err - ref) < 1e-9);
    }
}

TEST_CASE("Z error falls with alpha when q is close to the target") {
    const TargetDensity t = make_nakagami(0.0, 1.0, 4.0);
    const GaussianProposal q(vec({0}), scalar_cov(1.21));
    const double z = std::exp(*t.log_z);
    double prev = std::numeric_limits<double>::infinity();
    for (int a : {3, 5, 9, 15}) {
        const double err = std::abs(igh_estimate(igh_weights(grid_for(q, a), t, q), constant_function()).z_hat - z) / z;
        CAPTURE(a);
        CHECK(err <= prev);
        prev = err;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("estimates invariants") {
    const TargetDensity t = make_nakagami(0.0, 1.0, 4.0);
    const GaussianProposal q(vec({1}), scalar_cov(2.0));
    const WeightedSet ws = igh_weights(grid_for(q, 9), t, q);
    const Estimates e = igh_estimate(ws, identity_function());
    CHECK(e.z_hat >= 0.0);
    CHECK(e.ess_igh >= 1.0);
    CHECK(e.ess_igh <= 9.0);
    CHECK(!e.unnormalized);
    CHECK(std::abs(e.z_hat - ws.z_hat()) < 1e-12 * e.z_hat);
}

TEST_CASE("error bound") {
    CHECK(error_bound(3, 0.0) == 0.0);
    CHECK(std::abs(error_bound(1, 2.0) - 1.0) < 1e-14);
    CHECK(std::abs(error_bound(5, 3628800.0) - 120.0) < 1e-9);
    // realized error for x^10 under N(0,1) at alpha = 5
    const GaussianProposal q(vec({0}), scalar_cov(1));
    const TargetDensity t = make_gaussian_target(0.0, 1.0);
    const Estimates e = igh_estimate(igh_weights(grid_for(q, 5), t, q), power_function(10), t.log_z);
    const double err = std::abs((*e.unnormalized)(0) - 945.0);
    CHECK(err > 0.0);
    CHECK(err <= error_bound(5, 3628800.0));
}

TEST_CASE("resampling point mass") {
    PointSet ps;
    ps.points = Eigen::MatrixXd(1, 4);
    ps.points << -1, 0, 1, 2;
    ps.quad_weights = vec({1, 0, 0, 0});
    Rng rng(1);
    const PointSet thin = resample_thin(ps, 4, rng);
    CHECK((thin.points.array() == -1.0).all());
    CHECK((thin.quad_weights.array() == 0.25).all());
}

TEST_CASE("resampled Z is unbiased for the full-grid Z") {
    const TargetDensity t = make_nakagami(0.0, 1.0, 4.0);
    const GaussianProposal q(vec({0.5}), scalar_cov(1.5));
    const PointSet full = grid_for(q, 15);
    const double z_full = igh_estimate(igh_weights(full, t, q), constant_function()).z_hat;
    Rng rng(2024);
    const int reps = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < reps; ++i) {
        const PointSet thin = resample_thin(full, 7, rng);
        const double z = igh_estimate(igh_weights(thin, t, q), constant_function()).z_hat;
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - z_full) < 3.0 * se);

    // the weighted-set overload keeps importance weights on survivors
    const WeightedSet ws = igh_weights(full, t, q);
    const WeightedSet wt = resample_thin(ws, 5, rng);
    CHECK(wt.size() == 5);
    CHECK((wt.quad_weights.array() == 0.2).all());
    for (Eigen::Index i = 0; i < 5; ++i) {
        CHECK(std::abs(wt.is_weights(i) - std::exp(t.log_unnorm(wt.points.col(i)) - q.logpdf(wt.points.col(i)))) <
              1e-12 * wt.is_weights(i));
    }
}
