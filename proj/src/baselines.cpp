#include "iq/baselines.hpp"

#include "iq/error.hpp"
#include "iq/summation.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace iq {

namespace {

constexpr std::array<int, kMaxHaltonDim> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

template <std::size_t N>
double horner(const std::array<double, N>& c, double x) {
    double acc = c[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
    return acc;
}

}  // namespace

double radical_inverse(std::uint64_t index, int base) {
    const double inv = 1.0 / base;
    double factor = inv;
    double value = 0.0;
    while (index > 0) {
        value += static_cast<double>(index % static_cast<std::uint64_t>(base)) * factor;
        index /= static_cast<std::uint64_t>(base);
        factor *= inv;
    }
    return value;
}

Eigen::MatrixXd halton_points(Eigen::Index n, int dim, const Eigen::VectorXd& shift, Eigen::Index offset) {
    if (dim < 1 || dim > kMaxHaltonDim) {
        throw ShapeError("Halton points support 1 to " + std::to_string(kMaxHaltonDim) + " dimensions, got " +
                         std::to_string(dim));
    }
    if (shift.size() != dim) throw ShapeError("Cranley-Patterson shift must have one entry per dimension");
    Eigen::MatrixXd u(dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (int k = 0; k < dim; ++k) {
            const double raw = radical_inverse(static_cast<std::uint64_t>(j + offset + 2), kPrimes[static_cast<std::size_t>(k)]);
            double r = raw + shift(k);
            r -= std::floor(r);
            u(k, j) = r;
        }
    }
    return u;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }
    static constexpr std::array<double, 8> a{3.3871328727963666080e0,  1.3314166789178437745e+2,
                                             1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                             4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                             3.3430575583588128105e+4, 2.5090809287301226727e+3};
    static constexpr std::array<double, 8> b{1.0,
                                             4.2313330701600911252e+1, 6.8718700749205790830e+2,
                                             5.3941960214247511077e+3, 2.1213794301586595867e+4,
                                             3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                             5.2264952788528545610e+3};
    static constexpr std::array<double, 8> c{1.42343711074968357734e0, 4.63033784615654529590e0,
                                             5.76949722146069140550e0, 3.64784832476320460504e0,
                                             1.27045825245236838258e0, 2.41780725177450611770e-1,
                                             2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr std::array<double, 8> d{1.0,
                                             2.05319162663775882187e0, 1.67638483018380384940e0,
                                             6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                             1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                             1.05075007164441684324e-9};
    static constexpr std::array<double, 8> e{6.65790464350110377720e0, 5.46378491116411436990e0,
                                             1.78482653991729133580e0, 2.96560571828504891230e-1,
                                             2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                             2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr std::array<double, 8> f{1.0,
                                             5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                             1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                             1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                             2.04426310338993978564e-15};
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * horner(a, r) / horner(b, r);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = horner(c, r) / horner(d, r);
    } else {
        r -= 5.0;
        value = horner(e, r) / horner(f, r);
    }
    return q < 0.0 ? -value : value;
}

PointSet sample_point_set(const GaussianProposal& q, Eigen::Index n, Rng& rng) {
    PointSet ps;
    ps.points = q.sample(rng, n);
    ps.quad_weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    return ps;
}

PointSet qmc_point_set(const GaussianProposal& q, Eigen::Index n, const Eigen::VectorXd& shift, Eigen::Index offset) {
    const Eigen::MatrixXd u = halton_points(n, q.dim(), shift, offset);
    Eigen::MatrixXd z = u.unaryExpr([](double p) { return normal_quantile(p); });
    PointSet ps;
    ps.points = q.chol() * z;
    ps.points.colwise() += q.mu();
    ps.quad_weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    return ps;
}

namespace {

McEstimates weighted_estimate(const TargetDensity& target, const GaussianProposal& q, const PointSet& ps,
                              const TestFunction& f, std::uint64_t seed, std::optional<double> log_z) {
    const WeightedSet ws = igh_weights(ps, target, q);
    McEstimates out;
    out.estimates = igh_estimate(ws, f, log_z);
    out.seed = seed;
    out.samples = ps.size();
    out.counts = ws.counts;
    return out;
}

}  // namespace

McEstimates is_estimate(const TargetDensity& target, const GaussianProposal& q, const TestFunction& f, Eigen::Index n,
                        std::uint64_t seed, std::optional<double> log_z) {
    if (n < 1) throw ShapeError("importance sampling needs N >= 1");
    Rng rng(seed);
    return weighted_estimate(target, q, sample_point_set(q, n, rng), f, seed, log_z);
}

McEstimates qmc_is_estimate(const TargetDensity& target, const GaussianProposal& q, const TestFunction& f,
                            Eigen::Index n, std::uint64_t seed, std::optional<double> log_z) {
    if (n < 1) throw ShapeError("importance sampling needs N >= 1");
    Rng rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::VectorXd shift(q.dim());
    for (Eigen::Index k = 0; k < shift.size(); ++k) shift(k) = uniform(rng);
    return weighted_estimate(target, q, qmc_point_set(q, n, shift), f, seed, log_z);
}

AdaptTrace amis(const TargetDensity& target, const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                const AmisOptions& options, const TestFunction& f) {
    auto rng = std::make_shared<Rng>(options.seed);
    NodeSource nodes = [rng, n = options.samples](const GaussianProposal& q) { return sample_point_set(q, n, *rng); };
    return detail::run_temporal_adaptive(target, mu0, sigma0, options.iterations, AMIGHVariant::TemporalDM, f,
                                         options.log_z, nodes);
}

namespace {

AdaptTrace m_pmc_weighted(const TargetDensity& target, const std::vector<KernelInit>& inits, const MpmcOptions& options,
                          const TestFunction& f) {
    if (options.iterations < 1) throw ShapeError("adaptive schemes need at least one iteration");
    if (inits.empty()) throw ShapeError("population schemes need at least one kernel");
    if (options.samples < 1) throw ShapeError("M-PMC needs at least one draw per kernel");
    const Eigen::Index m = static_cast<Eigen::Index>(inits.size());
    const Eigen::Index total = m * options.samples;
    const Eigen::Index k = f(inits.front().mu).size();
    std::vector<Eigen::VectorXd> mus;
    std::vector<Eigen::MatrixXd> sigmas;
    for (const auto& init : inits) {
        if (init.mu.size() != target.dim) throw ShapeError("kernel mean does not match the target dimension");
        mus.push_back(init.mu);
        sigmas.push_back(init.sigma);
    }
    Eigen::VectorXd alpha = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    Rng rng(options.seed);

    AdaptTrace trace;
    EvalCounts counts;
    for (int t = 1; t <= options.iterations; ++t) {
        std::vector<GaussianProposal> kernels;
        for (Eigen::Index j = 0; j < m; ++j) {
            kernels.push_back(GaussianProposal::regularized(mus[static_cast<std::size_t>(j)], sigmas[static_cast<std::size_t>(j)]));
        }
        std::discrete_distribution<Eigen::Index> pick(alpha.data(), alpha.data() + m);
        Eigen::MatrixXd points(target.dim, total);
        for (Eigen::Index i = 0; i < total; ++i) points.col(i) = kernels[static_cast<std::size_t>(pick(rng))].sample(rng);

        Eigen::MatrixXd logs(m, total);
        for (Eigen::Index j = 0; j < m; ++j) {
            const double log_alpha = alpha(j) > 0.0 ? std::log(alpha(j)) : -std::numeric_limits<double>::infinity();
            logs.row(j) = (kernels[static_cast<std::size_t>(j)].logpdf_columns(points).array() + log_alpha).transpose();
        }
        Eigen::VectorXd log_psi(total);
        for (Eigen::Index i = 0; i < total; ++i) log_psi(i) = log_sum_exp(logs.col(i));

        IterationRecord rec;
        rec.iteration = t;
        rec.means = mus;
        rec.covariances = sigmas;
        rec.kernel_weights = alpha;
        counts.target_evals += total;
        counts.proposal_evals += m * total;
        counts.denominator_evals += total;
        try {
            const Eigen::VectorXd log_w = target.log_unnorm_columns(points) - log_psi;
            const WeightedSet ws = make_weighted_set(points, Eigen::VectorXd::Constant(total, 1.0 / static_cast<double>(total)),
                                                     log_w, total);
            rec.current = igh_estimate(ws, f, options.log_z);
            rec.cumulative = rec.current;
            for (Eigen::Index j = 0; j < m; ++j) {
                const Eigen::VectorXd resp = exp_of(logs.row(j).transpose().array() - log_psi.array()).matrix();
                const Eigen::VectorXd a = ws.normalized.cwiseProduct(resp);
                alpha(j) = pairwise_sum(a);
                if (!(alpha(j) >= kStarvationMass)) continue;
                const MomentMatch mm = moment_match(ws.points, a);
                if (mm.ok) {
                    mus[static_cast<std::size_t>(j)] = mm.mu;
                    sigmas[static_cast<std::size_t>(j)] = mm.sigma;
                }
            }
            alpha /= alpha.sum();
        } catch (const DegenerateWeightsError&) {
            rec.current = detail::degenerate_estimates(k, options.log_z.has_value());
            rec.cumulative = rec.current;
            rec.degenerate = true;
            rec.recovered = true;
            for (auto& s : sigmas) s *= kRecoveryInflation;
        }
        rec.counts = counts;
        trace.iterations.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace

AdaptTrace m_pmc(const TargetDensity& target, const std::vector<KernelInit>& inits, const MpmcOptions& options,
                 const TestFunction& f) {
    if (options.adapt_weights) return m_pmc_weighted(target, inits, options, f);
    auto rng = std::make_shared<Rng>(options.seed);
    NodeSource nodes = [rng, n = options.samples](const GaussianProposal& q) { return sample_point_set(q, n, *rng); };
    return detail::run_population_adaptive(target, inits, options.iterations, f, options.log_z, nodes);
}

}  // namespace iq
