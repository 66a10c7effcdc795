#include "iq/quad_rules.hpp"

#include "iq/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace iq {

namespace {

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
// three-term recurrence. mu0 is the total mass of the weight function.
void golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0, Rule1D& rule) {
    const Eigen::Index n = diag.size();
    if (n == 1) {
        rule.nodes = diag;
        rule.raw_weights = Eigen::VectorXd::Constant(1, mu0);
        rule.weights = Eigen::VectorXd::Ones(1);
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw InvalidOrderError("tridiagonal eigensolver did not converge for order " + std::to_string(n));
    }
    // Eigen returns eigenvalues in increasing order.
    rule.nodes = solver.eigenvalues();
    const Eigen::VectorXd first = solver.eigenvectors().row(0).transpose();
    rule.weights = first.array().square();
    rule.weights /= rule.weights.sum();
    rule.raw_weights = mu0 * rule.weights;
}

// Enforce exact mirror symmetry of a rule whose weight function is even.
void symmetrize(Rule1D& rule) {
    const Eigen::Index n = rule.nodes.size();
    for (Eigen::Index i = 0; i < n / 2; ++i) {
        const Eigen::Index j = n - 1 - i;
        const double t = 0.5 * (rule.nodes(j) - rule.nodes(i));
        rule.nodes(i) = -t;
        rule.nodes(j) = t;
        const double w = 0.5 * (rule.weights(i) + rule.weights(j));
        rule.weights(i) = w;
        rule.weights(j) = w;
    }
    if (n % 2 == 1) {
        rule.nodes(n / 2) = 0.0;
    }
    rule.weights /= rule.weights.sum();
}

void sort_increasing(Rule1D& rule) {
    const Eigen::Index n = rule.nodes.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return rule.nodes(a) < rule.nodes(b); });
    Rule1D sorted = rule;
    for (Eigen::Index i = 0; i < n; ++i) {
        sorted.nodes(i) = rule.nodes(order[static_cast<std::size_t>(i)]);
        sorted.weights(i) = rule.weights(order[static_cast<std::size_t>(i)]);
        sorted.raw_weights(i) = rule.raw_weights(order[static_cast<std::size_t>(i)]);
    }
    rule = std::move(sorted);
}

}  // namespace

std::string to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::Hermite: return "hermite";
        case RuleKind::Legendre: return "legendre";
        case RuleKind::ChebyshevGauss: return "chebyshev";
        case RuleKind::ChebyshevGauss2: return "chebyshev2";
        case RuleKind::Laguerre: return "laguerre";
    }
    return "unknown";
}

RuleKind rule_kind_from_string(const std::string& name) {
    for (auto kind : {RuleKind::Hermite, RuleKind::Legendre, RuleKind::ChebyshevGauss, RuleKind::ChebyshevGauss2,
                      RuleKind::Laguerre}) {
        if (to_string(kind) == name) return kind;
    }
    throw UnsupportedRuleError("unsupported rule '" + name +
                               "' (allowed: hermite, legendre, chebyshev, chebyshev2, laguerre)");
}

double hermite_polynomial(int n, double x) {
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * x * cur - 2.0 * k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

Eigen::VectorXd hermite_closed_form_weights(const Eigen::VectorXd& nodes) {
    const int alpha = static_cast<int>(nodes.size());
    // 2^{a-1} a! sqrt(pi) / a^2, accumulated in log space.
    const double log_num = (alpha - 1) * std::log(2.0) + std::lgamma(alpha + 1.0) + 0.5 * std::log(std::numbers::pi) -
                           2.0 * std::log(static_cast<double>(alpha));
    Eigen::VectorXd w(alpha);
    for (int i = 0; i < alpha; ++i) {
        const double h = hermite_polynomial(alpha - 1, nodes(i));
        w(i) = std::exp(log_num - 2.0 * std::log(std::abs(h)));
    }
    return w;
}

Rule1D hermite_rule(int alpha) {
    if (alpha < 1 || alpha > kMaxHermiteOrder) {
        throw InvalidOrderError("Hermite order must lie in [1, " + std::to_string(kMaxHermiteOrder) + "], got " +
                                std::to_string(alpha));
    }
    Rule1D rule;
    rule.kind = RuleKind::Hermite;
    rule.alpha = alpha;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(alpha);
    Eigen::VectorXd off(std::max(alpha - 1, 0));
    for (int k = 1; k < alpha; ++k) off(k - 1) = std::sqrt(0.5 * k);
    golub_welsch(diag, off, std::sqrt(std::numbers::pi), rule);
    symmetrize(rule);
    rule.raw_weights = std::sqrt(std::numbers::pi) * rule.weights;
    return rule;
}

Rule1D classical_rule(RuleKind kind, int alpha) {
    if (alpha < 1) {
        throw InvalidOrderError("quadrature order must be positive, got " + std::to_string(alpha));
    }
    if (kind == RuleKind::Hermite) return hermite_rule(alpha);

    Rule1D rule;
    rule.kind = kind;
    rule.alpha = alpha;
    const double pi = std::numbers::pi;
    switch (kind) {
        case RuleKind::Legendre: {
            Eigen::VectorXd diag = Eigen::VectorXd::Zero(alpha);
            Eigen::VectorXd off(std::max(alpha - 1, 0));
            for (int k = 1; k < alpha; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
            golub_welsch(diag, off, 2.0, rule);
            symmetrize(rule);
            rule.raw_weights = 2.0 * rule.weights;
            return rule;
        }
        case RuleKind::Laguerre: {
            Eigen::VectorXd diag(alpha);
            Eigen::VectorXd off(std::max(alpha - 1, 0));
            for (int k = 0; k < alpha; ++k) diag(k) = 2.0 * k + 1.0;
            for (int k = 1; k < alpha; ++k) off(k - 1) = k;
            golub_welsch(diag, off, 1.0, rule);
            return rule;
        }
        case RuleKind::ChebyshevGauss: {
            rule.nodes.resize(alpha);
            rule.raw_weights = Eigen::VectorXd::Constant(alpha, pi / alpha);
            for (int n = 1; n <= alpha; ++n) rule.nodes(n - 1) = std::cos((2.0 * n - 1.0) / (2.0 * alpha) * pi);
            break;
        }
        case RuleKind::ChebyshevGauss2: {
            rule.nodes.resize(alpha);
            rule.raw_weights.resize(alpha);
            for (int n = 1; n <= alpha; ++n) {
                const double angle = n * pi / (alpha + 1.0);
                rule.nodes(n - 1) = std::cos(angle);
                // sin^2: the unsquared sine is not exact even for constants when alpha >= 2.
                rule.raw_weights(n - 1) = pi / (alpha + 1.0) * std::sin(angle) * std::sin(angle);
            }
            break;
        }
        case RuleKind::Hermite: break;
    }
    rule.weights = rule.raw_weights / rule.raw_weights.sum();
    sort_increasing(rule);
    return rule;
}

GridRule tensor_grid(const Rule1D& rule, int dim) {
    if (dim < 1) throw ShapeError("grid dimension must be positive, got " + std::to_string(dim));
    const std::int64_t alpha = rule.alpha;
    std::int64_t count = 1;
    for (int i = 0; i < dim; ++i) {
        count *= alpha;
        if (count > kMaxGridPoints) {
            throw GridTooLargeError("tensor grid with alpha=" + std::to_string(alpha) + " and dim=" +
                                    std::to_string(dim) + " exceeds " + std::to_string(kMaxGridPoints) +
                                    " points; use resampling thinning to select fewer nodes");
        }
    }
    GridRule grid;
    grid.dim = dim;
    grid.alpha = rule.alpha;
    grid.points.resize(dim, count);
    grid.weights.resize(count);
    std::vector<int> index(static_cast<std::size_t>(dim), 0);
    for (std::int64_t n = 0; n < count; ++n) {
        double w = 1.0;
        for (int k = 0; k < dim; ++k) {
            const int i = index[static_cast<std::size_t>(k)];
            grid.points(k, n) = rule.nodes(i);
            w *= rule.weights(i);
        }
        grid.weights(n) = w;
        // Last dimension varies fastest.
        for (int k = dim - 1; k >= 0; --k) {
            if (++index[static_cast<std::size_t>(k)] < rule.alpha) break;
            index[static_cast<std::size_t>(k)] = 0;
        }
    }
    return grid;
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) {
        throw ShapeError("covariance must be square, got " + std::to_string(sigma.rows()) + "x" +
                         std::to_string(sigma.cols()));
    }
    const Eigen::Index d = sigma.rows();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        double diag = sigma(j, j) - l.row(j).head(j).squaredNorm();
        if (!(diag > 0.0) || !std::isfinite(diag)) {
            throw FactorizationError("covariance is not positive definite: leading minor " + std::to_string(j + 1) +
                                         " is not positive",
                                     static_cast<int>(j + 1));
        }
        l(j, j) = std::sqrt(diag);
        for (Eigen::Index i = j + 1; i < d; ++i) {
            l(i, j) = (sigma(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
        }
    }
    return l;
}

PointSet map_to_gaussian_factor(const GridRule& grid, const Eigen::VectorXd& mu, const Eigen::MatrixXd& chol,
                                int proposal_id) {
    if (mu.size() != grid.dim || chol.rows() != grid.dim || chol.cols() != grid.dim) {
        throw ShapeError("grid of dimension " + std::to_string(grid.dim) + " cannot be mapped onto a Gaussian of dimension " +
                         std::to_string(mu.size()));
    }
    PointSet ps;
    ps.points = (std::numbers::sqrt2 * chol) * grid.points;
    ps.points.colwise() += mu;
    ps.quad_weights = grid.weights;
    ps.proposal_id = proposal_id;
    return ps;
}

PointSet map_to_gaussian(const GridRule& grid, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                         int proposal_id) {
    return map_to_gaussian_factor(grid, mu, cholesky_lower(sigma), proposal_id);
}

}  // namespace iq
