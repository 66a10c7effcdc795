#pragma once

// One-dimensional Gaussian quadrature rules, tensor-product grids and the
// affine map that places a Gauss-Hermite grid on an arbitrary Gaussian.
//
// Hermite rules use the physicists' weight e^{-t^2}. A node t is mapped to a
// Gaussian N(mu, Sigma) through x = mu + sqrt(2) * L * t with L L^T = Sigma,
// and the weights are divided by sqrt(pi) per dimension so that they sum to 1.
// With that convention sum_n v_n p(x_n) equals E_q[p] exactly whenever p has
// per-dimension degree at most 2*alpha - 1.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace iq {

enum class RuleKind { Hermite, Legendre, ChebyshevGauss, ChebyshevGauss2, Laguerre };

std::string to_string(RuleKind kind);
RuleKind rule_kind_from_string(const std::string& name);

struct Rule1D {
    RuleKind kind = RuleKind::Hermite;
    int alpha = 0;
    Eigen::VectorXd nodes;
    /// Normalized to sum to 1.
    Eigen::VectorXd weights;
    /// Weights for the unnormalized weight function of the classical rule.
    Eigen::VectorXd raw_weights;
};

/// Largest order accepted by hermite_rule.
inline constexpr int kMaxHermiteOrder = 200;
/// Memory guard for tensor_grid.
inline constexpr std::int64_t kMaxGridPoints = 10'000'000;

Rule1D hermite_rule(int alpha);
Rule1D classical_rule(RuleKind kind, int alpha);

/// Table-I closed form for Hermite weights, v_n = 2^{a-1} a! sqrt(pi) / (a^2 H_{a-1}(x_n)^2).
/// Evaluated by recurrence; only meant for small alpha.
Eigen::VectorXd hermite_closed_form_weights(const Eigen::VectorXd& nodes);

/// Physicists' Hermite polynomial H_n(x) by three-term recurrence.
double hermite_polynomial(int n, double x);

struct GridRule {
    int dim = 0;
    int alpha = 0;
    /// dim x N, one point per column, row-major enumeration over per-dimension indices.
    Eigen::MatrixXd points;
    Eigen::VectorXd weights;

    Eigen::Index size() const { return weights.size(); }
};

GridRule tensor_grid(const Rule1D& rule, int dim);

struct PointSet {
    /// dim x N, one point per column.
    Eigen::MatrixXd points;
    /// The v_n, summing to 1.
    Eigen::VectorXd quad_weights;
    /// Index of the generating proposal inside a caller-defined collection.
    int proposal_id = 0;

    Eigen::Index size() const { return quad_weights.size(); }
    Eigen::Index dim() const { return points.rows(); }
};

/// Lower Cholesky factor of sigma; throws FactorizationError naming the first
/// leading minor that is not positive.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma);

PointSet map_to_gaussian(const GridRule& grid, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                         int proposal_id = 0);

/// Same map with an already-factorized covariance.
PointSet map_to_gaussian_factor(const GridRule& grid, const Eigen::VectorXd& mu, const Eigen::MatrixXd& chol,
                                int proposal_id = 0);

}  // namespace iq
