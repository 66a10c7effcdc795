#include "iq/proposals.hpp"

#include "iq/error.hpp"
#include "iq/quad_rules.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>

namespace iq {

namespace {

void check_shape(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
    if (mu.size() == 0) throw ShapeError("proposal mean must be non-empty");
    if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
        throw ShapeError("covariance is " + std::to_string(sigma.rows()) + "x" + std::to_string(sigma.cols()) +
                         " but the mean has dimension " + std::to_string(mu.size()));
    }
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw FactorizationError("covariance is not symmetric", 0);
    }
}

}  // namespace

GaussianProposal::GaussianProposal(Eigen::VectorXd mu, Eigen::MatrixXd sigma) : mu_(std::move(mu)), sigma_(std::move(sigma)) {
    check_shape(mu_, sigma_);
    sigma_ = 0.5 * (sigma_ + sigma_.transpose());
    chol_ = cholesky_lower(sigma_);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sigma_, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (!(min_eig > kMinCovarianceEigenvalue)) {
        throw FactorizationError("covariance smallest eigenvalue " + std::to_string(min_eig) + " is below 1e-12",
                                 static_cast<int>(mu_.size()));
    }
    const double log_det = 2.0 * chol_.diagonal().array().log().sum();
    log_norm_const_ = -0.5 * (static_cast<double>(mu_.size()) * std::log(2.0 * std::numbers::pi) + log_det);
}

GaussianProposal GaussianProposal::regularized(Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
    check_shape(mu, sigma);
    const double d = static_cast<double>(mu.size());
    const double jitter = 1e-9 * std::max(sigma.trace(), std::numeric_limits<double>::min()) / d;
    for (int attempt = 0;; ++attempt) {
        try {
            return GaussianProposal(mu, sigma);
        } catch (const FactorizationError&) {
            if (attempt == 3) throw;
            sigma.diagonal().array() += jitter;
        }
    }
}

double GaussianProposal::logpdf(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != mu_.size()) {
        throw ShapeError("point has dimension " + std::to_string(x.size()) + ", proposal has " +
                         std::to_string(mu_.size()));
    }
    const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(x - mu_);
    return log_norm_const_ - 0.5 * z.squaredNorm();
}

Eigen::VectorXd GaussianProposal::logpdf_columns(const Eigen::Ref<const Eigen::MatrixXd>& points) const {
    if (points.rows() != mu_.size()) {
        throw ShapeError("points have dimension " + std::to_string(points.rows()) + ", proposal has " +
                         std::to_string(mu_.size()));
    }
    Eigen::MatrixXd centered = points.colwise() - mu_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(centered);
    return (log_norm_const_ - 0.5 * centered.colwise().squaredNorm().array()).matrix().transpose();
}

Eigen::VectorXd GaussianProposal::sample(Rng& rng) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(mu_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    return mu_ + chol_ * z;
}

Eigen::MatrixXd GaussianProposal::sample(Rng& rng, Eigen::Index n) const {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd z(mu_.size(), n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = normal(rng);
    Eigen::MatrixXd x = chol_ * z;
    x.colwise() += mu_;
    return x;
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values) {
    const double m = values.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log(exp_of(values.array() - m).sum());
}

MixtureProposal::MixtureProposal(std::vector<GaussianProposal> components) : components_(std::move(components)) {
    if (components_.empty()) throw ShapeError("mixture needs at least one component");
    for (const auto& c : components_) {
        if (c.dim() != components_.front().dim()) throw ShapeError("mixture components differ in dimension");
    }
}

Eigen::MatrixXd MixtureProposal::component_logpdf(const Eigen::Ref<const Eigen::MatrixXd>& points) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(components_.size()), points.cols());
    for (std::size_t m = 0; m < components_.size(); ++m) {
        out.row(static_cast<Eigen::Index>(m)) = components_[m].logpdf_columns(points).transpose();
    }
    return out;
}

double MixtureProposal::logpdf(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd logs(static_cast<Eigen::Index>(components_.size()));
    for (std::size_t m = 0; m < components_.size(); ++m) logs(static_cast<Eigen::Index>(m)) = components_[m].logpdf(x);
    return log_sum_exp(logs) - std::log(static_cast<double>(components_.size()));
}

Eigen::VectorXd MixtureProposal::logpdf_columns(const Eigen::Ref<const Eigen::MatrixXd>& points) const {
    const Eigen::MatrixXd logs = component_logpdf(points);
    Eigen::VectorXd out(points.cols());
    const double log_m = std::log(static_cast<double>(components_.size()));
    for (Eigen::Index n = 0; n < points.cols(); ++n) out(n) = log_sum_exp(logs.col(n)) - log_m;
    return out;
}

}  // namespace iq
