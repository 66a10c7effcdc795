#pragma once

// Target densities used throughout the experiments. Each target exposes its
// log-unnormalized density and, when known, the log normalizing constant and
// ground-truth moments. Points outside a prior support evaluate to -inf.

#include "iq/proposals.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <optional>
#include <string>

namespace iq {

struct TargetDensity {
    std::string name;
    int dim = 0;
    std::function<double(const Eigen::VectorXd&)> log_unnorm;
    std::optional<double> log_z;
    std::optional<Eigen::VectorXd> true_mean;
    /// Raw moment E[x^p] of the normalized target; one-dimensional targets only.
    std::function<double(int)> true_moment_oracle;

    double operator()(const Eigen::VectorXd& x) const { return log_unnorm(x); }
    /// log_unnorm at every column of a dim x N matrix.
    Eigen::VectorXd log_unnorm_columns(const Eigen::Ref<const Eigen::MatrixXd>& points) const;
};

/// Same target with the unnormalized density multiplied by `factor` (> 0).
TargetDensity rescaled(const TargetDensity& target, double factor);

/// log pi(x) = r log|x| - (x - mu)^2 / (2 sigma^2). Moments and Z are available for mu = 0.
TargetDensity make_nakagami(double mu, double sigma, double r);

/// Normalized Gaussian target; moments are exposed for the one-dimensional case.
TargetDensity make_gaussian_target(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);
TargetDensity make_gaussian_target(double mu, double sigma);

/// Equal-weight mixture of normalized Gaussians (Z = 1).
TargetDensity make_gaussian_mixture(const std::vector<Eigen::VectorXd>& means, const std::vector<Eigen::MatrixXd>& covs);

/// The five-mode two-dimensional benchmark mixture.
TargetDensity make_gaussian_mixture_5();

// --- radial-velocity exoplanet model -------------------------------------------------

/// Parameter order is (v, k, p, e, omega).
struct ExoplanetPriors {
    std::array<double, 5> lo{-15.0, 0.0, 0.0, 0.0, 0.0};
    std::array<double, 5> hi{15.0, 50.0, 365.0, 6.283185307179586, 1.0};

    /// Eccentricity in [0, 1] and periastron longitude in [0, 2 pi].
    static ExoplanetPriors swapped_e_omega();
};

inline const std::array<double, 5> kExoplanetTruth{3.0, 2.0, 200.0, 3.141592653589793, 0.2};

/// v + k [cos(2 pi t / p + omega) + e cos(omega)].
double radial_velocity(const Eigen::Ref<const Eigen::VectorXd>& params, double t);

TargetDensity make_exoplanet(const Eigen::VectorXd& times, const Eigen::VectorXd& obs, double sigma_o,
                             const ExoplanetPriors& priors = {});

/// Observation times drawn uniformly on [0, horizon] and sorted.
Eigen::VectorXd simulate_exoplanet_times(int count, double horizon, Rng& rng);
/// Observations at `truth` with N(0, sigma_o^2) noise (sigma_o = 0 gives noiseless data).
Eigen::VectorXd simulate_exoplanet_obs(const Eigen::VectorXd& times, const Eigen::VectorXd& truth, double sigma_o,
                                       Rng& rng);

// --- Gaussian-process hyperparameter posterior ---------------------------------------

inline constexpr double kGpPriorExponent = 1.3;

/// Squared-exponential ARD kernel matrix for inputs (P x L) and length scales delta.
Eigen::MatrixXd ard_kernel(const Eigen::MatrixXd& inputs, const Eigen::Ref<const Eigen::VectorXd>& delta);

/// log N(y; 0, K + sigma^2 I) with jitter 1e-8 * mean(diag K); -inf if the factorization fails.
double gp_log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Posterior over theta = [delta_1..delta_L, sigma] with prior prod theta_l^{-beta} on theta_l > 0.
TargetDensity make_gp_posterior(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                                double beta = kGpPriorExponent);

struct GpData {
    Eigen::MatrixXd inputs;
    Eigen::VectorXd outputs;
};

/// Inputs uniform on [0, box]^L, outputs from a GP draw with length scales delta plus N(0, sigma^2) noise.
GpData simulate_gp_data(int count, const Eigen::VectorXd& delta, double sigma, double box, Rng& rng);

}  // namespace iq
