#include "helpers.hpp"
#include "iq/error.hpp"
#include "iq/quad_rules.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace iq;
using iqtest::gaussian_moment;

TEST_CASE("hermite rule examples") {
    const Rule1D r1 = hermite_rule(1);
    CHECK(r1.nodes(0) == doctest::Approx(0.0));
    CHECK(r1.weights(0) == doctest::Approx(1.0));

    const Rule1D r3 = hermite_rule(3);
    CHECK(std::abs(r3.nodes(0) + std::sqrt(1.5)) < 1e-12);
    CHECK(std::abs(r3.nodes(1)) < 1e-12);
    CHECK(std::abs(r3.nodes(2) - std::sqrt(1.5)) < 1e-12);
    CHECK(std::abs(r3.weights(0) - 1.0 / 6.0) < 1e-12);
    CHECK(std::abs(r3.weights(1) - 2.0 / 3.0) < 1e-12);
    CHECK(std::abs(r3.weights(2) - 1.0 / 6.0) < 1e-12);

    const Rule1D r2 = hermite_rule(2);
    CHECK(std::abs(r2.weights.dot(r2.nodes.cwiseAbs2()) - 0.5) < 1e-12);
}

TEST_CASE("hermite rule invariants up to the order cap") {
    for (int a : {1, 2, 5, 10, 37, 100, 200}) {
        CAPTURE(a);
        const Rule1D r = hermite_rule(a);
        REQUIRE(r.nodes.size() == a);
        REQUIRE(r.weights.size() == a);
        for (int i = 1; i < a; ++i) CHECK(r.nodes(i) > r.nodes(i - 1));
        for (int i = 0; i < a; ++i) CHECK(std::abs(r.nodes(i) + r.nodes(a - 1 - i)) <= 1e-12 * std::max(1.0, std::abs(r.nodes(i))));
        CHECK(std::abs(r.weights.sum() - 1.0) < 1e-12);
        CHECK((r.weights.array() > 0.0).all());
        CHECK(std::abs(r.raw_weights.sum() - std::sqrt(std::numbers::pi)) < 1e-11);
    }
}

TEST_CASE("hermite order errors") {
    CHECK_THROWS_AS(hermite_rule(0), InvalidOrderError);
    CHECK_THROWS_AS(hermite_rule(201), InvalidOrderError);
}

TEST_CASE("closed-form hermite weights match Golub-Welsch for alpha <= 10") {
    for (int a = 1; a <= 10; ++a) {
        CAPTURE(a);
        const Rule1D r = hermite_rule(a);
        const Eigen::VectorXd closed = hermite_closed_form_weights(r.nodes);
        CHECK((closed - r.raw_weights).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("hermite roots are zeros of H_alpha") {
    for (int a = 2; a <= 10; ++a) {
        const Rule1D r = hermite_rule(a);
        for (int i = 0; i < a; ++i) {
            const double scale = std::abs(hermite_polynomial(a, r.nodes(i) + 1e-3)) + 1.0;
            CHECK(std::abs(hermite_polynomial(a, r.nodes(i))) / scale < 1e-9);
        }
    }
    CHECK(hermite_polynomial(2, 1.5) == doctest::Approx(4.0 * 2.25 - 2.0));
}

TEST_CASE("classical rules") {
    const Rule1D cg = classical_rule(RuleKind::ChebyshevGauss, 2);
    CHECK(std::abs(cg.nodes(0) - std::cos(3.0 * std::numbers::pi / 4.0)) < 1e-14);
    CHECK(std::abs(cg.nodes(1) - std::cos(std::numbers::pi / 4.0)) < 1e-14);
    CHECK(std::abs(cg.raw_weights(0) - std::numbers::pi / 2.0) < 1e-14);
    CHECK(std::abs(cg.raw_weights(1) - std::numbers::pi / 2.0) < 1e-14);

    const Rule1D lg = classical_rule(RuleKind::Legendre, 2);
    CHECK(std::abs(lg.nodes(0) + 1.0 / std::sqrt(3.0)) < 1e-14);
    CHECK(std::abs(lg.nodes(1) - 1.0 / std::sqrt(3.0)) < 1e-14);
    CHECK(std::abs(lg.raw_weights(0) - 1.0) < 1e-14);
    CHECK(std::abs(lg.raw_weights(1) - 1.0) < 1e-14);

    const Rule1D la = classical_rule(RuleKind::Laguerre, 1);
    CHECK(std::abs(la.nodes(0) - 1.0) < 1e-14);
    CHECK(std::abs(la.raw_weights(0) - 1.0) < 1e-14);

    // Exactness against each weight function at alpha = 6 (degree <= 11).
    const int a = 6;
    const Rule1D leg = classical_rule(RuleKind::Legendre, a);
    const Rule1D lag = classical_rule(RuleKind::Laguerre, a);
    const Rule1D ch1 = classical_rule(RuleKind::ChebyshevGauss, a);
    const Rule1D ch2 = classical_rule(RuleKind::ChebyshevGauss2, a);
    double fact = 1.0;
    for (int p = 0; p <= 2 * a - 1; ++p) {
        CAPTURE(p);
        if (p > 0) fact *= p;
        const Eigen::VectorXd xp = leg.nodes.array().pow(p);
        CHECK(std::abs(leg.raw_weights.dot(xp) - (p % 2 ? 0.0 : 2.0 / (p + 1))) < 1e-12);
        CHECK(std::abs(lag.raw_weights.dot(lag.nodes.array().pow(p).matrix()) - fact) < 1e-9 * fact);
        // Chebyshev moments: int x^p / sqrt(1-x^2) and int x^p sqrt(1-x^2) over [-1, 1].
        double m1 = 0.0, m2 = 0.0;
        if (p % 2 == 0) {
            m1 = std::numbers::pi;
            for (int k = 1; k <= p / 2; ++k) m1 *= (2.0 * k - 1.0) / (2.0 * k);
            m2 = m1 / (p + 2);
        }
        CHECK(std::abs(ch1.raw_weights.dot(ch1.nodes.array().pow(p).matrix()) - m1) < 1e-12);
        CHECK(std::abs(ch2.raw_weights.dot(ch2.nodes.array().pow(p).matrix()) - m2) < 1e-12);
    }
    CHECK(rule_kind_from_string("hermite") == RuleKind::Hermite);
    CHECK_THROWS_AS(rule_kind_from_string("kronrod"), UnsupportedRuleError);
}

TEST_CASE("tensor grid examples") {
    const GridRule g = tensor_grid(hermite_rule(3), 2);
    CHECK(g.size() == 9);
    CHECK(std::abs(g.weights.sum() - 1.0) < 1e-12);
    CHECK(std::abs(g.weights(0) - 1.0 / 36.0) < 1e-14);
    // row-major over per-dimension indices: the last coordinate varies fastest
    CHECK(g.points(0, 0) == g.points(0, 1));
    CHECK(g.points(1, 0) != g.points(1, 1));

    const GridRule one = tensor_grid(hermite_rule(1), 5);
    CHECK(one.size() == 1);
    CHECK(one.points.cwiseAbs().maxCoeff() == 0.0);
    CHECK(one.weights(0) == doctest::Approx(1.0));

    CHECK(tensor_grid(hermite_rule(10), 5).size() == 100000);
    CHECK_THROWS_AS(tensor_grid(hermite_rule(30), 5), GridTooLargeError);
}

TEST_CASE("grid weights normalize for dim <= 5, alpha <= 10") {
    for (int d = 1; d <= 5; ++d)
        for (int a = 1; a <= 10; ++a) {
            const GridRule g = tensor_grid(hermite_rule(a), d);
            CHECK(g.size() == static_cast<Eigen::Index>(std::pow(a, d)));
            CHECK(std::abs(g.weights.sum() - 1.0) < 1e-10);
            CHECK((g.weights.array() > 0.0).all());
        }
}

TEST_CASE("map_to_gaussian examples") {
    const PointSet p1 = map_to_gaussian(tensor_grid(hermite_rule(1), 2), iqtest::vec({3, -1}), Eigen::MatrixXd::Identity(2, 2));
    CHECK(p1.points(0, 0) == doctest::Approx(3.0));
    CHECK(p1.points(1, 0) == doctest::Approx(-1.0));

    const PointSet p2 = map_to_gaussian(tensor_grid(hermite_rule(2), 1), iqtest::vec({0}), iqtest::scalar_cov(4));
    CHECK(std::abs(p2.quad_weights.dot(p2.points.row(0).transpose().cwiseAbs2()) - 4.0) < 1e-12);

    const PointSet p3 = map_to_gaussian(tensor_grid(hermite_rule(3), 1), iqtest::vec({1}), iqtest::scalar_cov(1));
    CHECK(std::abs(p3.quad_weights.dot(p3.points.row(0).transpose().array().cube().matrix()) - 4.0) < 1e-12);
}

TEST_CASE("polynomial exactness up to degree 2 alpha - 1") {
    const double cases[3][2] = {{0.0, 1.0}, {1.0, 1.0}, {-2.0, 0.5}};
    for (const auto& c : cases) {
        for (int a = 1; a <= 10; ++a) {
            const PointSet ps =
                map_to_gaussian(tensor_grid(hermite_rule(a), 1), iqtest::vec({c[0]}), iqtest::scalar_cov(c[1] * c[1]));
            for (int p = 0; p <= 2 * a - 1; ++p) {
                CAPTURE(a);
                CAPTURE(p);
                const double truth = gaussian_moment(p, c[0], c[1]);
                const double est = iqtest::quad_moment(ps.quad_weights, ps.points.row(0).transpose(), p);
                CHECK(std::abs(est - truth) <= 1e-9 * std::max(1.0, std::abs(truth)));
            }
        }
    }
}

TEST_CASE("affine equivariance and determinism") {
    Eigen::MatrixXd s(3, 3);
    s << 2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.5;
    const Eigen::VectorXd mu = iqtest::vec({1.0, -2.0, 0.5});
    for (int a = 1; a <= 6; ++a) {
        const GridRule g = tensor_grid(hermite_rule(a), 3);
        const PointSet ps = map_to_gaussian(g, mu, s);
        CHECK((ps.points * ps.quad_weights - mu).cwiseAbs().maxCoeff() < 1e-12);
        if (a >= 2) {
            const Eigen::MatrixXd c = ps.points.colwise() - mu;
            CHECK((c * ps.quad_weights.asDiagonal() * c.transpose() - s).cwiseAbs().maxCoeff() < 1e-8);
        }
        const PointSet again = map_to_gaussian(tensor_grid(hermite_rule(a), 3), mu, s);
        CHECK(again.points == ps.points);
        CHECK(again.quad_weights == ps.quad_weights);
    }
}

TEST_CASE("non positive definite covariance names the minor") {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 2.0, 2.0, 1.0;
    try {
        cholesky_lower(s);
        FAIL("expected FactorizationError");
    } catch (const FactorizationError& e) {
        CHECK(e.minor() == 2);
    }
    CHECK_THROWS_AS(map_to_gaussian(tensor_grid(hermite_rule(2), 2), Eigen::VectorXd::Zero(2), s), FactorizationError);
}
