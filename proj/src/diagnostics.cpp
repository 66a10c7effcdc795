#include "iq/diagnostics.hpp"

#include "iq/error.hpp"
#include "iq/igh.hpp"
#include "iq/summation.hpp"

#include <algorithm>
#include <cmath>

namespace iq {

EssReport ess_igh(const Eigen::Ref<const Eigen::VectorXd>& normalized, const Eigen::Ref<const Eigen::VectorXd>& quad_weights) {
    if (normalized.size() != quad_weights.size() || normalized.size() == 0) {
        throw ShapeError("ESS-IGH needs matching, non-empty weight vectors");
    }
    const double wsum = pairwise_sum(normalized);
    if (!(wsum > 0.0) || !std::isfinite(wsum)) throw DegenerateWeightsError("ESS-IGH: combined weights sum to zero");
    const Eigen::VectorXd wbar = normalized / wsum;
    const Eigen::VectorXd v = quad_weights / pairwise_sum(quad_weights);
    const Eigen::Index n = v.size();

    EssReport report;
    v.minCoeff(&report.j_star);  // first minimum on ties
    const double l2sq = pairwise_sum((wbar - v).array().square().matrix());
    report.l2 = std::sqrt(l2sq);
    // worst case summed the same way as l2 so the one-hot at j* gives a ratio of exactly 1
    Eigen::VectorXd worst = -v;
    worst(report.j_star) += 1.0;
    const double star2 = pairwise_sum(worst.array().square().matrix());
    report.l2_star = std::sqrt(star2);
    if (n == 1) {
        report.ess_igh = 1.0;
        return report;
    }
    const double ess = static_cast<double>(n) / ((static_cast<double>(n) - 1.0) * (l2sq / star2) + 1.0);
    report.ess_igh = std::clamp(ess, 1.0, static_cast<double>(n));
    return report;
}

EssReport ess_igh(const WeightedSet& ws) { return ess_igh(ws.normalized, ws.quad_weights); }

double classic_ess(const Eigen::Ref<const Eigen::VectorXd>& weights) {
    const double s = pairwise_sum(weights);
    const Eigen::VectorXd sq = weights.array().square();
    const double s2 = pairwise_sum(sq);
    if (!(s2 > 0.0)) throw DegenerateWeightsError("classic ESS: all weights are zero");
    return s * s / s2;
}

}  // namespace iq
