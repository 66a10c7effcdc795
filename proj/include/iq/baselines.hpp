#pragma once

// Stochastic competitors: plain and randomized-QMC importance sampling, and the
// sampling twins of the adaptive quadrature schemes (AMIS mirrors AM-IGH with
// temporal deterministic-mixture weights, M-PMC mirrors M-PIGH). The adaptive
// baselines run through the same loops as their quadrature counterparts; only
// the node placement differs.

#include "iq/adapt.hpp"
#include "iq/igh.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace iq {

/// Largest dimension served by the built-in Halton bases.
inline constexpr int kMaxHaltonDim = 20;

/// Radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, int base);

/// dim x n Halton points in (0,1)^dim using the first `dim` primes, starting at
/// index 2 + offset (index 1, the point 1/2, is skipped), then rotated by frac(u + shift).
Eigen::MatrixXd halton_points(Eigen::Index n, int dim, const Eigen::VectorXd& shift, Eigen::Index offset = 0);

/// Standard normal CDF.
double normal_cdf(double x);
/// Inverse standard normal CDF (Wichura's AS241, about 1e-16 relative accuracy).
double normal_quantile(double p);

struct McEstimates {
    Estimates estimates;
    std::uint64_t seed = 0;
    Eigen::Index samples = 0;
    EvalCounts counts;
};

/// Draws n points from q with weight 1/n each; w' then equals the plain IS weight.
PointSet sample_point_set(const GaussianProposal& q, Eigen::Index n, Rng& rng);

McEstimates is_estimate(const TargetDensity& target, const GaussianProposal& q, const TestFunction& f, Eigen::Index n,
                        std::uint64_t seed, std::optional<double> log_z = std::nullopt);

/// Randomized-QMC point set for q: Halton, Cranley-Patterson shift, inverse normal CDF, affine map.
PointSet qmc_point_set(const GaussianProposal& q, Eigen::Index n, const Eigen::VectorXd& shift, Eigen::Index offset = 0);

McEstimates qmc_is_estimate(const TargetDensity& target, const GaussianProposal& q, const TestFunction& f,
                            Eigen::Index n, std::uint64_t seed, std::optional<double> log_z = std::nullopt);

struct AmisOptions {
    Eigen::Index samples = 100;
    int iterations = 10;
    std::optional<double> log_z;
    std::uint64_t seed = 0;
};

AdaptTrace amis(const TargetDensity& target, const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                const AmisOptions& options, const TestFunction& f);

struct MpmcOptions {
    /// Draws per kernel and iteration.
    Eigen::Index samples = 25;
    int iterations = 10;
    std::optional<double> log_z;
    std::uint64_t seed = 0;
    /// Adapt the mixture weights as well. Draws then come from the weighted
    /// mixture as a whole (M * samples per iteration), each draw is weighted
    /// against that mixture, and a kernel's new weight is its responsibility mass.
    bool adapt_weights = false;
};

AdaptTrace m_pmc(const TargetDensity& target, const std::vector<KernelInit>& inits, const MpmcOptions& options,
                 const TestFunction& f);

}  // namespace iq
