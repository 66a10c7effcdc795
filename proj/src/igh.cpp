#include "iq/igh.hpp"

#include "iq/error.hpp"
#include "iq/summation.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace iq {

double WeightedSet::z_hat() const { return std::exp(log_z_hat); }

WeightedSet make_weighted_set(Eigen::MatrixXd points, Eigen::VectorXd quad_weights, Eigen::VectorXd log_is_weights,
                              Eigen::Index points_per_proposal) {
    const Eigen::Index n = quad_weights.size();
    if (points.cols() != n || log_is_weights.size() != n || n == 0) {
        throw ShapeError("weighted set needs matching, non-empty points and weights");
    }
    WeightedSet ws;
    ws.points = std::move(points);
    ws.quad_weights = std::move(quad_weights);
    ws.log_is_weights = std::move(log_is_weights);
    ws.points_per_proposal = points_per_proposal;
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isnan(ws.log_is_weights(i))) ws.log_is_weights(i) = neg_inf;
    }
    const double log_n = std::log(static_cast<double>(points_per_proposal));
    const Eigen::VectorXd log_combined = ws.log_is_weights.array() + ws.quad_weights.array().log() + log_n;
    ws.is_weights = exp_of(ws.log_is_weights.array());
    ws.combined = exp_of(log_combined.array());
    const double shift = log_combined.maxCoeff();
    if (!std::isfinite(shift)) {
        if (shift > 0.0) throw DegenerateWeightsError("importance weights overflow (+inf log weight)");
        throw DegenerateWeightsError("all importance weights are zero: the proposal misses the target mass");
    }
    const Eigen::VectorXd scaled = exp_of(log_combined.array() - shift);
    const double total = pairwise_sum(scaled);
    ws.normalized = scaled / total;
    ws.log_z_hat = shift + std::log(total) - std::log(static_cast<double>(n));
    return ws;
}

TestFunction identity_function() {
    return [](const Eigen::VectorXd& x) { return x; };
}

TestFunction power_function(int p) {
    return [p](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::pow(x(0), p)); };
}

TestFunction constant_function() {
    return [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); };
}

WeightedSet igh_weights(const PointSet& ps, const TargetDensity& target, const GaussianProposal& q) {
    if (target.dim != q.dim() || ps.dim() != q.dim()) {
        throw ShapeError("target, proposal and points disagree on dimension");
    }
    const Eigen::VectorXd log_pi = target.log_unnorm_columns(ps.points);
    const Eigen::VectorXd log_q = q.logpdf_columns(ps.points);
    WeightedSet ws = make_weighted_set(ps.points, ps.quad_weights, log_pi - log_q, ps.size());
    ws.counts.target_evals = ps.size();
    ws.counts.proposal_evals = ps.size();
    ws.counts.denominator_evals = ps.size();
    return ws;
}

Estimates igh_estimate(const WeightedSet& ws, const TestFunction& f, std::optional<double> log_z) {
    const Eigen::Index n = ws.size();
    if (n < 1) throw ShapeError("estimate needs at least one point");
    if (!(ws.normalized.size() == n)) throw DegenerateWeightsError("weighted set was never normalized");
    Eigen::VectorXd x = ws.points.col(0);
    const Eigen::Index k = f(x).size();
    // f values, one column per point, so each component reduces with a fixed order.
    Eigen::MatrixXd weighted(k, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x = ws.points.col(i);
        const double w = ws.normalized(i);
        weighted.col(i) = w == 0.0 ? Eigen::VectorXd::Zero(k) : Eigen::VectorXd(w * f(x));
    }
    Estimates est;
    est.self_normalized.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::VectorXd row = weighted.row(j).transpose();
        est.self_normalized(j) = pairwise_sum(row);
    }
    est.log_z_hat = ws.log_z_hat;
    est.z_hat = std::exp(ws.log_z_hat);
    // (1/(Z N)) sum w' f = (Z-hat / Z) sum wbar' f
    if (log_z) est.unnormalized = std::exp(ws.log_z_hat - *log_z) * est.self_normalized;
    est.ess_igh = ess_igh(ws).ess_igh;
    return est;
}

namespace {

std::vector<Eigen::Index> draw_indices(const Eigen::VectorXd& probs, Eigen::Index n_prime, Rng& rng) {
    if (n_prime < 1) throw ShapeError("resampling needs n_prime >= 1");
    std::discrete_distribution<Eigen::Index> pick(probs.data(), probs.data() + probs.size());
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_prime));
    for (auto& i : idx) i = pick(rng);
    return idx;
}

}  // namespace

PointSet resample_thin(const PointSet& ps, Eigen::Index n_prime, Rng& rng) {
    const auto idx = draw_indices(ps.quad_weights, n_prime, rng);
    PointSet out;
    out.points.resize(ps.dim(), n_prime);
    for (Eigen::Index j = 0; j < n_prime; ++j) out.points.col(j) = ps.points.col(idx[static_cast<std::size_t>(j)]);
    out.quad_weights = Eigen::VectorXd::Constant(n_prime, 1.0 / static_cast<double>(n_prime));
    out.proposal_id = ps.proposal_id;
    return out;
}

WeightedSet resample_thin(const WeightedSet& ws, Eigen::Index n_prime, Rng& rng) {
    const Eigen::VectorXd v = ws.quad_weights / pairwise_sum(ws.quad_weights);
    const auto idx = draw_indices(v, n_prime, rng);
    Eigen::MatrixXd points(ws.points.rows(), n_prime);
    Eigen::VectorXd log_w(n_prime);
    for (Eigen::Index j = 0; j < n_prime; ++j) {
        const Eigen::Index i = idx[static_cast<std::size_t>(j)];
        points.col(j) = ws.points.col(i);
        log_w(j) = ws.log_is_weights(i);
    }
    WeightedSet out = make_weighted_set(std::move(points), Eigen::VectorXd::Constant(n_prime, 1.0 / static_cast<double>(n_prime)),
                                        std::move(log_w), n_prime);
    out.counts.target_evals = n_prime;
    out.counts.proposal_evals = n_prime;
    out.counts.denominator_evals = n_prime;
    return out;
}

double error_bound(int alpha, double sup_deriv_2a) {
    if (alpha < 1) throw InvalidOrderError("error bound needs alpha >= 1");
    if (sup_deriv_2a < 0.0) throw ShapeError("supremum of a derivative norm must be non-negative");
    if (sup_deriv_2a == 0.0) return 0.0;
    return std::exp(std::lgamma(alpha + 1.0) - std::lgamma(2.0 * alpha + 1.0) + std::log(sup_deriv_2a));
}

}  // namespace iq
