#pragma once

#include <Eigen/Dense>

#include <cmath>

#include <random>
#include <vector>

namespace iq {

using Rng = std::mt19937_64;

/// Smallest covariance eigenvalue accepted by GaussianProposal.
inline constexpr double kMinCovarianceEigenvalue = 1e-12;

/// Multivariate normal N(mu, sigma) with the lower Cholesky factor and the
/// log normalizing constant cached at construction.
class GaussianProposal {
public:
    GaussianProposal(Eigen::VectorXd mu, Eigen::MatrixXd sigma);

    /// Builds the proposal, adding jitter 1e-9 * trace / d to the diagonal (up to three
    /// times) when sigma fails to factorize. Throws FactorizationError after that.
    static GaussianProposal regularized(Eigen::VectorXd mu, Eigen::MatrixXd sigma);

    int dim() const { return static_cast<int>(mu_.size()); }
    const Eigen::VectorXd& mu() const { return mu_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    const Eigen::MatrixXd& chol() const { return chol_; }
    double log_norm_const() const { return log_norm_const_; }

    double logpdf(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// Log density at every column of `points`.
    Eigen::VectorXd logpdf_columns(const Eigen::Ref<const Eigen::MatrixXd>& points) const;

    Eigen::VectorXd sample(Rng& rng) const;
    /// dim x n matrix of draws.
    Eigen::MatrixXd sample(Rng& rng, Eigen::Index n) const;

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd chol_;
    double log_norm_const_ = 0.0;
};

/// Equal-weight mixture psi(x) = (1/M) sum_m q_m(x).
class MixtureProposal {
public:
    explicit MixtureProposal(std::vector<GaussianProposal> components);

    int dim() const { return components_.front().dim(); }
    std::size_t size() const { return components_.size(); }
    const std::vector<GaussianProposal>& components() const { return components_; }

    double logpdf(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd logpdf_columns(const Eigen::Ref<const Eigen::MatrixXd>& points) const;

    /// Per-component log densities at each column: M x N.
    Eigen::MatrixXd component_logpdf(const Eigen::Ref<const Eigen::MatrixXd>& points) const;

private:
    std::vector<GaussianProposal> components_;
};

/// Elementwise exp with exp(-inf) = 0 exactly; Eigen's packet exp clamps large negative inputs.
inline Eigen::ArrayXd exp_of(const Eigen::Ref<const Eigen::ArrayXd>& values) {
    return values.unaryExpr([](double v) { return std::exp(v); });
}

/// log(sum exp(values)) with max-shift; -inf when every entry is -inf.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace iq
