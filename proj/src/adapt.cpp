#include "iq/adapt.hpp"

#include "iq/error.hpp"
#include "iq/summation.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace iq {

std::string to_string(AMIGHVariant variant) {
    return variant == AMIGHVariant::LastProposal ? "last_proposal" : "temporal_dm";
}

MomentMatch moment_match(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::Ref<const Eigen::VectorXd>& weights) {
    const double total = pairwise_sum(weights);
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw DegenerateWeightsError("moment matching needs a positive weight mass");
    }
    const Eigen::Index d = points.rows();
    const Eigen::Index n = points.cols();
    const Eigen::VectorXd w = weights / total;
    MomentMatch mm;
    mm.mu = Eigen::VectorXd::Zero(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const Eigen::VectorXd terms = points.row(k).transpose().cwiseProduct(w);
        mm.mu(k) = pairwise_sum(terms);
    }
    const Eigen::MatrixXd centered = points.colwise() - mm.mu;
    const Eigen::MatrixXd scaled = centered * w.asDiagonal();
    mm.sigma.resize(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b <= a; ++b) {
            const Eigen::VectorXd terms = scaled.row(a).transpose().cwiseProduct(centered.row(b).transpose());
            const double s = n > 0 ? pairwise_sum(terms) : 0.0;
            mm.sigma(a, b) = s;
            mm.sigma(b, a) = s;
        }
    }
    const double jitter = 1e-9 * mm.sigma.trace() / static_cast<double>(d);
    for (;;) {
        try {
            GaussianProposal check(mm.mu, mm.sigma);
            mm.ok = true;
            return mm;
        } catch (const FactorizationError&) {
            if (mm.jitter_attempts == 3 || !(jitter > 0.0)) {
                mm.ok = false;
                return mm;
            }
            ++mm.jitter_attempts;
            mm.sigma.diagonal().array() += jitter;
        }
    }
}

MomentMatch moment_match(const WeightedSet& pooled) { return moment_match(pooled.points, pooled.normalized); }

namespace detail {

Estimates degenerate_estimates(Eigen::Index k, bool with_unnormalized) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Estimates e;
    e.self_normalized = Eigen::VectorXd::Constant(k, nan);
    if (with_unnormalized) e.unnormalized = e.self_normalized;
    e.z_hat = 0.0;
    e.log_z_hat = -std::numeric_limits<double>::infinity();
    e.ess_igh = nan;
    return e;
}

namespace {

struct Block {
    Eigen::MatrixXd points;
    Eigen::VectorXd quad_weights;
    Eigen::VectorXd log_target;
    /// log sum_{i <= t} q_i(x) for TemporalDM, log q_tau(x) for LastProposal.
    Eigen::VectorXd log_denominator_sum;
};

Eigen::VectorXd logaddexp(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd out(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double m = std::max(a(i), b(i));
        out(i) = std::isfinite(m) ? m + std::log(std::exp(a(i) - m) + std::exp(b(i) - m)) : m;
    }
    return out;
}

Eigen::Index output_dim(const TestFunction& f, const Eigen::VectorXd& probe) { return f(probe).size(); }

}  // namespace

AdaptTrace run_temporal_adaptive(const TargetDensity& target, const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                                 int iterations, AMIGHVariant variant, const TestFunction& f,
                                 std::optional<double> log_z, const NodeSource& nodes) {
    if (iterations < 1) throw ShapeError("adaptive schemes need at least one iteration");
    if (mu0.size() != target.dim) throw ShapeError("initial mean does not match the target dimension");
    const Eigen::Index k = output_dim(f, mu0);

    AdaptTrace trace;
    std::vector<GaussianProposal> history;
    std::vector<Block> blocks;
    EvalCounts counts;
    Eigen::VectorXd mu = mu0;
    Eigen::MatrixXd sigma = sigma0;

    for (int t = 1; t <= iterations; ++t) {
        history.push_back(GaussianProposal::regularized(mu, sigma));
        const GaussianProposal& q = history.back();
        const PointSet ps = nodes(q);
        const Eigen::Index n = ps.size();

        Block block{ps.points, ps.quad_weights, target.log_unnorm_columns(ps.points), {}};
        counts.target_evals += n;
        if (variant == AMIGHVariant::LastProposal) {
            block.log_denominator_sum = q.logpdf_columns(ps.points);
            counts.proposal_evals += n;
        } else {
            for (auto& old : blocks) {
                old.log_denominator_sum = logaddexp(old.log_denominator_sum, q.logpdf_columns(old.points));
                counts.proposal_evals += old.points.cols();
            }
            Eigen::MatrixXd logs(static_cast<Eigen::Index>(history.size()), n);
            for (std::size_t i = 0; i < history.size(); ++i) {
                logs.row(static_cast<Eigen::Index>(i)) = history[i].logpdf_columns(ps.points).transpose();
            }
            block.log_denominator_sum.resize(n);
            for (Eigen::Index j = 0; j < n; ++j) block.log_denominator_sum(j) = log_sum_exp(logs.col(j));
            counts.proposal_evals += n * static_cast<Eigen::Index>(history.size());
        }
        blocks.push_back(std::move(block));

        const double log_t = variant == AMIGHVariant::TemporalDM ? std::log(static_cast<double>(t)) : 0.0;
        Eigen::Index total = 0;
        for (const auto& b : blocks) total += b.points.cols();
        counts.denominator_evals += variant == AMIGHVariant::TemporalDM ? total : n;

        Eigen::MatrixXd all_points(target.dim, total);
        Eigen::VectorXd all_v(total);
        Eigen::VectorXd all_log_w(total);
        Eigen::Index offset = 0;
        for (const auto& b : blocks) {
            const Eigen::Index m = b.points.cols();
            all_points.middleCols(offset, m) = b.points;
            all_v.segment(offset, m) = b.quad_weights;
            all_log_w.segment(offset, m) = b.log_target.array() - (b.log_denominator_sum.array() - log_t);
            offset += m;
        }

        IterationRecord rec;
        rec.iteration = t;
        rec.means = {q.mu()};
        rec.covariances = {q.sigma()};
        bool adapted = false;
        try {
            const WeightedSet current = make_weighted_set(ps.points, ps.quad_weights, all_log_w.tail(n), n);
            rec.current = igh_estimate(current, f, log_z);
        } catch (const DegenerateWeightsError&) {
            rec.current = degenerate_estimates(k, log_z.has_value());
        }
        try {
            const WeightedSet pooled = make_weighted_set(std::move(all_points), std::move(all_v), std::move(all_log_w), n);
            rec.cumulative = igh_estimate(pooled, f, log_z);
            const MomentMatch mm = moment_match(pooled);
            if (mm.ok) {
                mu = mm.mu;
                sigma = mm.sigma;
                adapted = true;
            }
        } catch (const DegenerateWeightsError&) {
            rec.cumulative = degenerate_estimates(k, log_z.has_value());
            rec.degenerate = true;
        }
        if (!adapted) {
            mu = q.mu();
            sigma = kRecoveryInflation * q.sigma();
            rec.recovered = true;
        }
        rec.counts = counts;
        trace.iterations.push_back(std::move(rec));
    }
    return trace;
}

AdaptTrace run_population_adaptive(const TargetDensity& target, const std::vector<KernelInit>& inits, int iterations,
                                   const TestFunction& f, std::optional<double> log_z, const NodeSource& nodes) {
    if (iterations < 1) throw ShapeError("adaptive schemes need at least one iteration");
    if (inits.empty()) throw ShapeError("population schemes need at least one kernel");
    const Eigen::Index m = static_cast<Eigen::Index>(inits.size());
    const Eigen::Index k = output_dim(f, inits.front().mu);

    std::vector<Eigen::VectorXd> mus;
    std::vector<Eigen::MatrixXd> sigmas;
    for (const auto& init : inits) {
        if (init.mu.size() != target.dim) throw ShapeError("kernel mean does not match the target dimension");
        mus.push_back(init.mu);
        sigmas.push_back(init.sigma);
    }

    AdaptTrace trace;
    EvalCounts counts;
    for (int t = 1; t <= iterations; ++t) {
        std::vector<GaussianProposal> kernels;
        std::vector<PointSet> sets;
        kernels.reserve(static_cast<std::size_t>(m));
        for (Eigen::Index j = 0; j < m; ++j) {
            kernels.push_back(GaussianProposal::regularized(mus[static_cast<std::size_t>(j)], sigmas[static_cast<std::size_t>(j)]));
            sets.push_back(nodes(kernels.back()));
            sets.back().proposal_id = static_cast<int>(j);
        }
        const Eigen::Index n = sets.front().size();

        IterationRecord rec;
        rec.iteration = t;
        rec.means = mus;
        rec.covariances = sigmas;
        // Counted up front: the evaluations happen even if the weights turn out degenerate.
        counts.target_evals += m * n;
        counts.proposal_evals += m * m * n;
        counts.denominator_evals += m * n;
        try {
            const WeightedSet pooled = migh_weights(sets, target, kernels, MIGHScheme::DM);
            rec.current = migh_estimate(pooled, f, log_z, m, n);
            rec.cumulative = rec.current;

            const Eigen::MatrixXd& logs = *pooled.component_log_density;
            Eigen::MatrixXd resp(m, pooled.size());
            for (Eigen::Index i = 0; i < pooled.size(); ++i) {
                const double lse = log_sum_exp(logs.col(i));
                resp.col(i) = exp_of(logs.col(i).array() - lse);
            }
            for (Eigen::Index j = 0; j < m; ++j) {
                const Eigen::VectorXd a = pooled.normalized.cwiseProduct(resp.row(j).transpose());
                if (!(pairwise_sum(a) >= kStarvationMass)) continue;
                const MomentMatch mm = moment_match(pooled.points, a);
                if (mm.ok) {
                    mus[static_cast<std::size_t>(j)] = mm.mu;
                    sigmas[static_cast<std::size_t>(j)] = mm.sigma;
                }
            }
        } catch (const DegenerateWeightsError&) {
            rec.current = degenerate_estimates(k, log_z.has_value());
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

}  // namespace detail

AdaptTrace am_igh(const TargetDensity& target, const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                  const AmighOptions& options, const TestFunction& f) {
    const GridRule grid = tensor_grid(hermite_rule(options.alpha), target.dim);
    auto rng = std::make_shared<Rng>(options.seed);
    NodeSource nodes = [grid, rng, resample = options.resample](const GaussianProposal& q) {
        PointSet ps = map_to_gaussian_factor(grid, q.mu(), q.chol());
        if (resample > 0) ps = resample_thin(ps, resample, *rng);
        return ps;
    };
    return detail::run_temporal_adaptive(target, mu0, sigma0, options.iterations, options.variant, f, options.log_z, nodes);
}

AdaptTrace m_pigh(const TargetDensity& target, const std::vector<KernelInit>& inits, const MpighOptions& options,
                  const TestFunction& f) {
    const GridRule grid = tensor_grid(hermite_rule(options.alpha), target.dim);
    NodeSource nodes = [grid](const GaussianProposal& q) { return map_to_gaussian_factor(grid, q.mu(), q.chol()); };
    return detail::run_population_adaptive(target, inits, options.iterations, f, options.log_z, nodes);
}

}  // namespace iq
