#include "iq/migh.hpp"

#include "iq/error.hpp"

#include <cmath>

namespace iq {

std::string to_string(MIGHScheme scheme) { return scheme == MIGHScheme::SM ? "sm" : "dm"; }

WeightedSet migh_weights(const std::vector<PointSet>& pointsets, const TargetDensity& target,
                         const std::vector<GaussianProposal>& proposals, MIGHScheme scheme) {
    if (pointsets.empty() || pointsets.size() != proposals.size()) {
        throw ShapeError("need one point set per proposal (got " + std::to_string(pointsets.size()) + " sets, " +
                         std::to_string(proposals.size()) + " proposals)");
    }
    const Eigen::Index m = static_cast<Eigen::Index>(proposals.size());
    const Eigen::Index n = pointsets.front().size();
    const Eigen::Index d = target.dim;
    for (std::size_t i = 0; i < pointsets.size(); ++i) {
        if (pointsets[i].size() != n) {
            throw ShapeError("all proposals must contribute the same number of points (set " + std::to_string(i) +
                             " has " + std::to_string(pointsets[i].size()) + ", expected " + std::to_string(n) + ")");
        }
        if (pointsets[i].dim() != d || proposals[i].dim() != d) throw ShapeError("proposal dimension mismatch");
    }

    Eigen::MatrixXd points(d, m * n);
    Eigen::VectorXd v(m * n);
    for (Eigen::Index j = 0; j < m; ++j) {
        points.middleCols(j * n, n) = pointsets[static_cast<std::size_t>(j)].points;
        v.segment(j * n, n) = pointsets[static_cast<std::size_t>(j)].quad_weights;
    }
    const Eigen::VectorXd log_pi = target.log_unnorm_columns(points);
    Eigen::VectorXd log_phi(m * n);
    std::optional<Eigen::MatrixXd> component_logs;
    EvalCounts counts;
    counts.target_evals = m * n;
    counts.denominator_evals = m * n;
    if (scheme == MIGHScheme::SM) {
        for (Eigen::Index j = 0; j < m; ++j) {
            log_phi.segment(j * n, n) = proposals[static_cast<std::size_t>(j)].logpdf_columns(points.middleCols(j * n, n));
        }
        counts.proposal_evals = m * n;
    } else {
        const MixtureProposal psi(proposals);
        component_logs = psi.component_logpdf(points);
        const double log_m = std::log(static_cast<double>(m));
        for (Eigen::Index i = 0; i < m * n; ++i) log_phi(i) = log_sum_exp(component_logs->col(i)) - log_m;
        counts.proposal_evals = m * m * n;
    }
    WeightedSet ws = make_weighted_set(std::move(points), std::move(v), log_pi - log_phi, n);
    ws.counts = counts;
    ws.component_log_density = std::move(component_logs);
    return ws;
}

Estimates migh_estimate(const WeightedSet& pooled, const TestFunction& f, std::optional<double> log_z, Eigen::Index m,
                        Eigen::Index n) {
    if (pooled.size() != m * n) {
        throw ShapeError("pooled set has " + std::to_string(pooled.size()) + " points, expected M*N = " +
                         std::to_string(m * n));
    }
    return igh_estimate(pooled, f, log_z);
}

}  // namespace iq
