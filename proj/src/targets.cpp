#include "iq/targets.hpp"

#include "iq/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace iq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// E[x^p] for N(mu, s2) via m_p = mu m_{p-1} + (p-1) s2 m_{p-2}.
double gaussian_raw_moment(double mu, double s2, int p) {
    if (p < 0) return std::numeric_limits<double>::quiet_NaN();
    double prev = 1.0;
    if (p == 0) return prev;
    double cur = mu;
    for (int k = 2; k <= p; ++k) {
        const double next = mu * cur + (k - 1) * s2 * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

}  // namespace

Eigen::VectorXd TargetDensity::log_unnorm_columns(const Eigen::Ref<const Eigen::MatrixXd>& points) const {
    if (points.rows() != dim) {
        throw ShapeError("points have dimension " + std::to_string(points.rows()) + ", target " + name + " has " +
                         std::to_string(dim));
    }
    Eigen::VectorXd out(points.cols());
    Eigen::VectorXd x(dim);
    for (Eigen::Index n = 0; n < points.cols(); ++n) {
        x = points.col(n);
        out(n) = log_unnorm(x);
    }
    return out;
}

TargetDensity rescaled(const TargetDensity& target, double factor) {
    TargetDensity out = target;
    const double shift = std::log(factor);
    out.log_unnorm = [inner = target.log_unnorm, shift](const Eigen::VectorXd& x) { return inner(x) + shift; };
    if (target.log_z) out.log_z = *target.log_z + shift;
    return out;
}

TargetDensity make_nakagami(double mu, double sigma, double r) {
    if (!(sigma > 0.0)) throw ShapeError("Nakagami scale must be positive");
    if (r < 0.0) throw ShapeError("Nakagami exponent must be non-negative");
    TargetDensity t;
    t.name = "nakagami";
    t.dim = 1;
    t.log_unnorm = [mu, sigma, r](const Eigen::VectorXd& x) {
        const double z = x(0) - mu;
        const double quad = -z * z / (2.0 * sigma * sigma);
        if (r == 0.0) return quad;
        if (x(0) == 0.0) return kNegInf;
        return r * std::log(std::abs(x(0))) + quad;
    };
    if (mu == 0.0) {
        // int |x|^s e^{-x^2/(2 sigma^2)} dx = sigma^{s+1} 2^{(s+1)/2} Gamma((s+1)/2)
        const auto log_abs_integral = [sigma](double s) {
            return (s + 1.0) * std::log(sigma) + 0.5 * (s + 1.0) * std::log(2.0) + std::lgamma(0.5 * (s + 1.0));
        };
        t.log_z = log_abs_integral(r);
        t.true_mean = Eigen::VectorXd::Zero(1);
        t.true_moment_oracle = [log_abs_integral, r](int p) {
            if (p % 2 != 0) return 0.0;
            return std::exp(log_abs_integral(r + p) - log_abs_integral(r));
        };
    }
    return t;
}

TargetDensity make_gaussian_target(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
    GaussianProposal density(mu, sigma);
    TargetDensity t;
    t.name = "gaussian";
    t.dim = density.dim();
    t.log_unnorm = [density](const Eigen::VectorXd& x) { return density.logpdf(x); };
    t.log_z = 0.0;
    t.true_mean = mu;
    if (t.dim == 1) {
        const double m = mu(0);
        const double s2 = sigma(0, 0);
        t.true_moment_oracle = [m, s2](int p) { return gaussian_raw_moment(m, s2, p); };
    }
    return t;
}

TargetDensity make_gaussian_target(double mu, double sigma) {
    return make_gaussian_target(Eigen::VectorXd::Constant(1, mu), Eigen::MatrixXd::Constant(1, 1, sigma * sigma));
}

TargetDensity make_gaussian_mixture(const std::vector<Eigen::VectorXd>& means, const std::vector<Eigen::MatrixXd>& covs) {
    if (means.empty() || means.size() != covs.size()) throw ShapeError("mixture needs matching means and covariances");
    std::vector<GaussianProposal> comps;
    comps.reserve(means.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(means.front().size());
    for (std::size_t i = 0; i < means.size(); ++i) {
        comps.emplace_back(means[i], covs[i]);
        mean += means[i];
    }
    MixtureProposal mixture(std::move(comps));
    TargetDensity t;
    t.name = "gaussian_mixture";
    t.dim = mixture.dim();
    t.log_unnorm = [mixture](const Eigen::VectorXd& x) { return mixture.logpdf(x); };
    t.log_z = 0.0;
    t.true_mean = mean / static_cast<double>(means.size());
    return t;
}

TargetDensity make_gaussian_mixture_5() {
    const auto vec = [](double a, double b) { return Eigen::Vector2d(a, b).eval(); };
    const auto mat = [](double a, double b, double c) {
        Eigen::Matrix2d m;
        m << a, b, b, c;
        return Eigen::MatrixXd(m);
    };
    std::vector<Eigen::VectorXd> means{vec(-10, -10), vec(0, 16), vec(13, 8), vec(-9, 7), vec(14, -14)};
    std::vector<Eigen::MatrixXd> covs{mat(2, 0.6, 1), mat(2, -0.4, 2), mat(2, 0.8, 2), mat(3, 0, 0.5), mat(2, -0.1, 2)};
    auto t = make_gaussian_mixture(means, covs);
    t.name = "multimodal";
    return t;
}

ExoplanetPriors ExoplanetPriors::swapped_e_omega() {
    ExoplanetPriors p;
    p.hi[3] = 1.0;
    p.hi[4] = 2.0 * std::numbers::pi;
    return p;
}

double radial_velocity(const Eigen::Ref<const Eigen::VectorXd>& params, double t) {
    const double v = params(0), k = params(1), p = params(2), e = params(3), w = params(4);
    return v + k * (std::cos(2.0 * std::numbers::pi / p * t + w) + e * std::cos(w));
}

TargetDensity make_exoplanet(const Eigen::VectorXd& times, const Eigen::VectorXd& obs, double sigma_o,
                             const ExoplanetPriors& priors) {
    if (times.size() < 1 || times.size() != obs.size()) {
        throw ShapeError("exoplanet data needs D >= 1 matching times and observations");
    }
    if (!(sigma_o > 0.0)) throw ShapeError("observation noise must be positive");
    double log_prior = 0.0;
    for (int i = 0; i < 5; ++i) {
        if (!(priors.hi[i] > priors.lo[i])) throw ShapeError("invalid prior box in coordinate " + std::to_string(i));
        log_prior -= std::log(priors.hi[i] - priors.lo[i]);
    }
    const double var = sigma_o * sigma_o;
    const double log_norm = -0.5 * static_cast<double>(times.size()) * std::log(2.0 * std::numbers::pi * var) + log_prior;
    TargetDensity t;
    t.name = "exoplanet";
    t.dim = 5;
    t.log_unnorm = [times, obs, var, log_norm, priors](const Eigen::VectorXd& x) {
        for (int i = 0; i < 5; ++i) {
            if (!(x(i) >= priors.lo[i] && x(i) <= priors.hi[i])) return kNegInf;
        }
        if (!(x(2) > 0.0)) return kNegInf;
        double sse = 0.0;
        for (Eigen::Index d = 0; d < times.size(); ++d) {
            const double r = obs(d) - radial_velocity(x, times(d));
            sse += r * r;
        }
        return log_norm - 0.5 * sse / var;
    };
    return t;
}

Eigen::VectorXd simulate_exoplanet_times(int count, double horizon, Rng& rng) {
    std::uniform_real_distribution<double> uniform(0.0, horizon);
    Eigen::VectorXd t(count);
    for (int i = 0; i < count; ++i) t(i) = uniform(rng);
    std::sort(t.data(), t.data() + t.size());
    return t;
}

Eigen::VectorXd simulate_exoplanet_obs(const Eigen::VectorXd& times, const Eigen::VectorXd& truth, double sigma_o,
                                       Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd y(times.size());
    for (Eigen::Index d = 0; d < times.size(); ++d) {
        y(d) = radial_velocity(truth, times(d)) + (sigma_o > 0.0 ? sigma_o * normal(rng) : 0.0);
    }
    return y;
}

Eigen::MatrixXd ard_kernel(const Eigen::MatrixXd& inputs, const Eigen::Ref<const Eigen::VectorXd>& delta) {
    const Eigen::Index p = inputs.rows();
    const Eigen::MatrixXd scaled = inputs * delta.cwiseInverse().asDiagonal();
    Eigen::MatrixXd k(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = std::exp(-0.5 * (scaled.row(i) - scaled.row(j)).squaredNorm());
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

double gp_log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                                  const Eigen::Ref<const Eigen::VectorXd>& theta) {
    const Eigen::Index l = inputs.cols();
    const Eigen::Index p = inputs.rows();
    Eigen::MatrixXd c = ard_kernel(inputs, theta.head(l));
    const double sigma = theta(l);
    const double jitter = 1e-8 * c.diagonal().mean();
    c.diagonal().array() += sigma * sigma + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) return kNegInf;
    const Eigen::VectorXd alpha = llt.matrixL().solve(outputs);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double value = -0.5 * alpha.squaredNorm() - 0.5 * log_det - 0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi);
    return std::isfinite(value) ? value : kNegInf;
}

TargetDensity make_gp_posterior(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs, double beta) {
    if (inputs.rows() < 2 || inputs.rows() != outputs.size()) {
        throw ShapeError("GP data needs P >= 2 inputs matching the outputs");
    }
    TargetDensity t;
    t.name = "gp";
    t.dim = static_cast<int>(inputs.cols()) + 1;
    t.log_unnorm = [inputs, outputs, beta](const Eigen::VectorXd& theta) {
        if ((theta.array() <= 0.0).any()) return kNegInf;
        return gp_log_marginal_likelihood(inputs, outputs, theta) - beta * theta.array().log().sum();
    };
    return t;
}

GpData simulate_gp_data(int count, const Eigen::VectorXd& delta, double sigma, double box, Rng& rng) {
    std::uniform_real_distribution<double> uniform(0.0, box);
    std::normal_distribution<double> normal(0.0, 1.0);
    GpData data;
    data.inputs.resize(count, delta.size());
    for (int i = 0; i < count; ++i)
        for (Eigen::Index l = 0; l < delta.size(); ++l) data.inputs(i, l) = uniform(rng);
    Eigen::MatrixXd k = ard_kernel(data.inputs, delta);
    k.diagonal().array() += 1e-8;
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
    Eigen::VectorXd z(count);
    for (int i = 0; i < count; ++i) z(i) = normal(rng);
    data.outputs = chol * z;
    for (int i = 0; i < count; ++i) data.outputs(i) += sigma * normal(rng);
    return data;
}

}  // namespace iq
