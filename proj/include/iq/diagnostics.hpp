#pragma once

#include <Eigen/Dense>

namespace iq {

struct WeightedSet;

/// Distance-based effective sample size for importance quadrature.
///
/// l2 is the Euclidean distance between the normalized combined weights and the
/// quadrature weights. l2_star is its largest attainable value, reached when the
/// only nonzero importance weight sits on the node with the smallest quadrature
/// weight (index j_star, lowest index on ties). The report maps l2 = 0 to N and
/// l2 = l2_star to 1.
struct EssReport {
    double ess_igh = 0.0;
    double l2 = 0.0;
    double l2_star = 0.0;
    Eigen::Index j_star = 0;
};

/// `normalized` are the w-bar' (summing to 1), `quad_weights` the v (renormalized internally).
EssReport ess_igh(const Eigen::Ref<const Eigen::VectorXd>& normalized, const Eigen::Ref<const Eigen::VectorXd>& quad_weights);
EssReport ess_igh(const WeightedSet& ws);

/// Classical (sum w)^2 / sum w^2, kept for comparative logging.
double classic_ess(const Eigen::Ref<const Eigen::VectorXd>& weights);

}  // namespace iq
