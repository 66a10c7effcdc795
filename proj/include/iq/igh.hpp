#pragma once

// Importance Gauss-Hermite: quadrature nodes placed on a Gaussian proposal and
// reweighted by the target-to-proposal ratio.
//
//   w_n  = pi(x_n) / q(x_n)
//   w'_n = w_n v_n N
//   Z    ~ (1/N) sum w'_n
//   I    ~ sum wbar'_n f(x_n)              (self-normalized)
//   I    ~ (1/(Z N)) sum w'_n f(x_n)       (unnormalized, Z known)
//
// All weights are built in the log domain; the linear-domain vectors are
// exposed for inspection but the normalized weights and log Z-hat are computed
// with a max shift, so they survive arbitrarily large target/proposal mismatch.

#include "iq/diagnostics.hpp"
#include "iq/proposals.hpp"
#include "iq/quad_rules.hpp"
#include "iq/targets.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>

namespace iq {

struct EvalCounts {
    std::int64_t target_evals = 0;
    /// Gaussian component density evaluations.
    std::int64_t proposal_evals = 0;
    /// Importance-weight denominator evaluations (one per weighted point per weighting pass).
    std::int64_t denominator_evals = 0;

    EvalCounts& operator+=(const EvalCounts& other) {
        target_evals += other.target_evals;
        proposal_evals += other.proposal_evals;
        denominator_evals += other.denominator_evals;
        return *this;
    }
};

struct WeightedSet {
    Eigen::MatrixXd points;
    Eigen::VectorXd quad_weights;
    Eigen::VectorXd log_is_weights;
    /// w_n = exp(log_is_weights); may underflow to 0 where the log weight is still finite.
    Eigen::VectorXd is_weights;
    /// w'_n = w_n v_n N.
    Eigen::VectorXd combined;
    /// wbar'_n, computed from the log domain; sums to 1.
    Eigen::VectorXd normalized;
    /// log((1/size) sum w'_n).
    double log_z_hat = 0.0;
    /// Points per proposal (the N in w' = w v N).
    Eigen::Index points_per_proposal = 0;
    EvalCounts counts;
    /// Per-component log densities (M x size), filled by deterministic-mixture weighting.
    std::optional<Eigen::MatrixXd> component_log_density;

    Eigen::Index size() const { return quad_weights.size(); }
    double z_hat() const;
};

/// Assembles a WeightedSet from log importance weights. Throws DegenerateWeightsError
/// when every log weight is -inf (or NaN).
WeightedSet make_weighted_set(Eigen::MatrixXd points, Eigen::VectorXd quad_weights, Eigen::VectorXd log_is_weights,
                              Eigen::Index points_per_proposal);

using TestFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// f(x) = x.
TestFunction identity_function();
/// f(x) = x_0^p (scalar).
TestFunction power_function(int p);
/// f(x) = 1.
TestFunction constant_function();

struct Estimates {
    std::optional<Eigen::VectorXd> unnormalized;
    Eigen::VectorXd self_normalized;
    double z_hat = 0.0;
    double log_z_hat = 0.0;
    double ess_igh = 0.0;
};

WeightedSet igh_weights(const PointSet& ps, const TargetDensity& target, const GaussianProposal& q);

Estimates igh_estimate(const WeightedSet& ws, const TestFunction& f, std::optional<double> log_z = std::nullopt);

/// Draws n_prime nodes with replacement with probability v_n and gives each
/// quadrature weight 1/n_prime.
PointSet resample_thin(const PointSet& ps, Eigen::Index n_prime, Rng& rng);
/// Same selection applied to an already weighted set; survivors keep their importance weights.
WeightedSet resample_thin(const WeightedSet& ws, Eigen::Index n_prime, Rng& rng);

/// alpha! * sup|h^{(2 alpha)}| / (2 alpha)!, evaluated in log space.
double error_bound(int alpha, double sup_deriv_2a);

}  // namespace iq
