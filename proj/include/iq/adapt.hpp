#pragma once

// Adaptive importance quadrature.
//
// am_igh adapts one Gaussian proposal by weighted moment matching over every
// node placed so far. With LastProposal each node keeps the proposal that
// placed it as denominator; with TemporalDM the denominator is the equal
// mixture of all proposals used up to the current iteration and every past
// node is reweighted each iteration.
//
// m_pigh adapts M equally weighted kernels. Nodes of all kernels are weighted
// against the full mixture, and each kernel is refit with its responsibilities
// rho_m(x) = q_m(x) / sum_j q_j(x) folded into the normalized weights.
//
// Both loops are also driven by random node generators (see baselines.hpp),
// which is how AMIS and M-PMC share exactly the same weighting and adaptation.

#include "iq/igh.hpp"
#include "iq/migh.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace iq {

enum class AMIGHVariant { LastProposal, TemporalDM };

std::string to_string(AMIGHVariant variant);

/// Factor applied to the covariance when an iteration cannot be adapted.
inline constexpr double kRecoveryInflation = 4.0;
/// Responsibility mass under which an M-PIGH kernel keeps its parameters.
inline constexpr double kStarvationMass = 1e-12;

struct MomentMatch {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    int jitter_attempts = 0;
    /// False when the covariance could not be made positive definite.
    bool ok = false;
};

MomentMatch moment_match(const WeightedSet& pooled);
/// Weighted mean and covariance with explicit (not necessarily normalized) weights.
MomentMatch moment_match(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::Ref<const Eigen::VectorXd>& weights);

struct IterationRecord {
    int iteration = 0;
    /// Proposal parameters used to place this iteration's nodes.
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covariances;
    /// Mixture weights of the kernels; empty when they are equal.
    Eigen::VectorXd kernel_weights;
    /// Estimates over every node accumulated up to this iteration.
    Estimates cumulative;
    /// Estimates from this iteration's nodes only.
    Estimates current;
    /// Cumulative evaluation counts after this iteration.
    EvalCounts counts;
    bool degenerate = false;
    bool recovered = false;
};

struct AdaptTrace {
    std::vector<IterationRecord> iterations;

    const IterationRecord& last() const { return iterations.back(); }
};

/// Places nodes for one Gaussian; used to swap quadrature grids for random draws.
using NodeSource = std::function<PointSet(const GaussianProposal&)>;

struct AmighOptions {
    int alpha = 3;
    int iterations = 10;
    AMIGHVariant variant = AMIGHVariant::LastProposal;
    std::optional<double> log_z;
    /// When positive, each iteration resamples this many nodes from the grid.
    Eigen::Index resample = 0;
    std::uint64_t seed = 0;
};

AdaptTrace am_igh(const TargetDensity& target, const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                  const AmighOptions& options, const TestFunction& f);

struct MpighOptions {
    int alpha = 3;
    int iterations = 10;
    std::optional<double> log_z;
};

struct KernelInit {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
};

AdaptTrace m_pigh(const TargetDensity& target, const std::vector<KernelInit>& inits, const MpighOptions& options,
                  const TestFunction& f);

namespace detail {

AdaptTrace run_temporal_adaptive(const TargetDensity& target, const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                                 int iterations, AMIGHVariant variant, const TestFunction& f,
                                 std::optional<double> log_z, const NodeSource& nodes);

AdaptTrace run_population_adaptive(const TargetDensity& target, const std::vector<KernelInit>& inits, int iterations,
                                   const TestFunction& f, std::optional<double> log_z, const NodeSource& nodes);

/// Estimates with NaN entries, used for iterations whose weights all vanished.
Estimates degenerate_estimates(Eigen::Index k, bool with_unnormalized);

}  // namespace detail

}  // namespace iq
