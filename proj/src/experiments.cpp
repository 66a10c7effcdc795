#include "iq/experiments.hpp"

#include "iq/baselines.hpp"
#include "iq/error.hpp"
#include "iq/migh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

namespace iq {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep = ", ") {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

[[noreturn]] void bad_field(const std::string& field, const std::string& message) {
    throw ConfigError("config field '" + field + "': " + message);
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string num17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---- typed config access ----------------------------------------------------

const json* lookup(const json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

double get_double(const json& j, const std::string& key, double fallback) {
    const json* v = lookup(j, key);
    if (!v) return fallback;
    if (!v->is_number()) bad_field(key, "expected a number");
    return v->get<double>();
}

int get_int(const json& j, const std::string& key, int fallback) {
    const json* v = lookup(j, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) bad_field(key, "expected an integer");
    return v->get<int>();
}

bool get_bool(const json& j, const std::string& key, bool fallback) {
    const json* v = lookup(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) bad_field(key, "expected true or false");
    return v->get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& fallback) {
    const json* v = lookup(j, key);
    if (!v) return fallback;
    if (!v->is_string()) bad_field(key, "expected a string");
    return v->get<std::string>();
}

std::vector<double> get_doubles(const json& j, const std::string& key, std::vector<double> fallback) {
    const json* v = lookup(j, key);
    if (!v) return fallback;
    if (v->is_number()) return {v->get<double>()};
    if (!v->is_array()) bad_field(key, "expected a number or a list of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) bad_field(key, "expected a list of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<int> get_ints(const json& j, const std::string& key, std::vector<int> fallback) {
    const json* v = lookup(j, key);
    if (!v) return fallback;
    if (v->is_number_integer()) return {v->get<int>()};
    if (!v->is_array()) bad_field(key, "expected an integer or a list of integers");
    std::vector<int> out;
    for (const auto& e : *v) {
        if (!e.is_number_integer()) bad_field(key, "expected a list of integers");
        out.push_back(e.get<int>());
    }
    return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::optional<Eigen::VectorXd> get_vector(const json& j, const std::string& key) {
    if (!lookup(j, key)) return std::nullopt;
    return to_vector(get_doubles(j, key, {}));
}

std::optional<Eigen::MatrixXd> get_matrix(const json& j, const std::string& key) {
    const json* v = lookup(j, key);
    if (!v) return std::nullopt;
    if (!v->is_array() || v->empty()) bad_field(key, "expected a list of rows");
    const auto rows = static_cast<Eigen::Index>(v->size());
    Eigen::MatrixXd m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = (*v)[static_cast<std::size_t>(r)];
        if (!row.is_array()) bad_field(key, "expected a list of rows");
        if (r == 0) m.resize(rows, static_cast<Eigen::Index>(row.size()));
        if (static_cast<Eigen::Index>(row.size()) != m.cols()) bad_field(key, "rows have different lengths");
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (!row[static_cast<std::size_t>(c)].is_number()) bad_field(key, "expected numbers");
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

int positive(int value, const std::string& key) {
    if (value < 1) bad_field(key, "must be >= 1, got " + std::to_string(value));
    return value;
}

std::filesystem::path resolve(const ExperimentConfig& config, const std::string& key, const std::string& fallback) {
    std::filesystem::path p = get_string(config.params, key, fallback);
    if (p.is_relative() && !config.base_dir.empty()) p = config.base_dir / p;
    return p;
}

// ---- seeds and threads -----------------------------------------------------

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) { return splitmix(seed * 0x100000001B3ULL + stream); }

struct RunPlan {
    int runs = 1;
    std::uint64_t seed_base = 1;
    int threads = 1;

    std::uint64_t seed(int run) const { return seed_base + static_cast<std::uint64_t>(run); }
};

RunPlan run_plan(const json& params, int default_runs) {
    RunPlan plan;
    plan.runs = positive(get_int(params, "seeds", default_runs), "seeds");
    const int base = get_int(params, "seed_base", 1);
    if (base < 0) bad_field("seed_base", "must be >= 0");
    plan.seed_base = static_cast<std::uint64_t>(base);
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    plan.threads = positive(get_int(params, "threads", hw), "threads");
    return plan;
}

template <class Fn>
std::vector<ResultRow> fan_out(const RunPlan& plan, Fn fn) {
    std::vector<std::vector<ResultRow>> per_run(static_cast<std::size_t>(plan.runs));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(plan.runs));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int r = next++;
            if (r >= plan.runs) return;
            try {
                per_run[static_cast<std::size_t>(r)] = fn(r);
            } catch (...) {
                errors[static_cast<std::size_t>(r)] = std::current_exception();
            }
        }
    };
    const int threads = std::min(plan.threads, plan.runs);
    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<ResultRow> rows;
    for (auto& chunk : per_run) rows.insert(rows.end(), chunk.begin(), chunk.end());
    return rows;
}

// ---- rows ------------------------------------------------------------------

struct Oracle {
    std::optional<Eigen::VectorXd> mean;
    std::optional<double> z;
};

ResultRow make_row(const std::string& method, int run, std::uint64_t seed, int iteration, const std::string& setting,
                   const std::string& estimator, const Eigen::VectorXd& estimate, const Estimates& e,
                   const Oracle& oracle, const EvalCounts& counts) {
    ResultRow row;
    row.method = method;
    row.run = run;
    row.seed = seed;
    row.iteration = iteration;
    row.setting = setting;
    row.estimator = estimator;
    row.estimate = estimate;
    if (oracle.mean && oracle.mean->size() == estimate.size()) {
        row.sqerr = (estimate - *oracle.mean).array().square().matrix();
    }
    row.z_hat = e.z_hat;
    if (oracle.z) row.z_sqerr = (e.z_hat - *oracle.z) * (e.z_hat - *oracle.z);
    row.ess_igh = e.ess_igh;
    row.counts = counts;
    return row;
}

Oracle oracle_of(const TargetDensity& target) {
    Oracle o;
    o.mean = target.true_mean;
    if (target.log_z) o.z = std::exp(*target.log_z);
    return o;
}

struct SingleRun {
    Estimates estimates;
    EvalCounts counts;
};

// One proposal, one of igh / is / snis / qmc_is.
SingleRun single_proposal(const std::string& method, const TargetDensity& target, const GaussianProposal& q, int order,
                          std::uint64_t seed, const TestFunction& f) {
    SingleRun out;
    if (method == "igh") {
        const PointSet ps = map_to_gaussian_factor(tensor_grid(hermite_rule(order), target.dim), q.mu(), q.chol());
        const WeightedSet ws = igh_weights(ps, target, q);
        out.estimates = igh_estimate(ws, f, target.log_z);
        out.counts = ws.counts;
        return out;
    }
    const McEstimates mc = method == "qmc_is" ? qmc_is_estimate(target, q, f, order, seed, target.log_z)
                                              : is_estimate(target, q, f, order, seed, target.log_z);
    out.estimates = mc.estimates;
    out.counts = mc.counts;
    return out;
}

void require_methods(const ExperimentConfig& config, const std::vector<std::string>& allowed) {
    for (const auto& m : config.methods) {
        if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
            bad_field("method", "'" + m + "' is not available for experiment " + config.experiment + " (allowed: " +
                                    join(allowed) + ")");
        }
    }
}

bool deterministic(const std::string& method) {
    return method == "igh" || method == "sm_igh" || method == "dm_igh" || method == "am_igh" || method == "am_igh_dm" ||
           method == "m_pigh";
}

std::vector<ResultRow> adaptive_rows(const std::string& method, int run, std::uint64_t seed, const std::string& setting,
                                     const AdaptTrace& trace, const Oracle& oracle, const std::vector<int>& iterations) {
    std::vector<ResultRow> rows;
    for (const auto& rec : trace.iterations) {
        if (!iterations.empty() && std::find(iterations.begin(), iterations.end(), rec.iteration) == iterations.end()) {
            continue;
        }
        rows.push_back(make_row(method, run, seed, rec.iteration, setting, "cumulative", rec.cumulative.self_normalized,
                                rec.cumulative, oracle, rec.counts));
        rows.push_back(make_row(method, run, seed, rec.iteration, setting, "current", rec.current.self_normalized,
                                rec.current, oracle, rec.counts));
    }
    return rows;
}

Eigen::Index grid_size(int alpha, int dim) {
    return static_cast<Eigen::Index>(std::llround(std::pow(static_cast<double>(alpha), dim)));
}

// ---- toy 1 -------------------------------------------------------------------

std::vector<ResultRow> run_toy1(const ExperimentConfig& config) {
    require_methods(config, {"igh", "is", "snis", "qmc_is"});
    const json& p = config.params;
    const int alpha = positive(get_int(p, "alpha", 5), "alpha");
    const TargetDensity target =
        make_nakagami(get_double(p, "mu", 0.0), get_double(p, "sigma", 1.0), get_double(p, "r", 4.0));
    const double q_sigma = get_double(p, "proposal_sigma", 1.0);
    const GaussianProposal q(Eigen::VectorXd::Constant(1, get_double(p, "proposal_mean", 0.0)),
                             Eigen::MatrixXd::Constant(1, 1, q_sigma * q_sigma));
    const std::vector<int> moments = get_ints(p, "moments", {2, 4, 6, 8, 10});
    const int n = positive(get_int(p, "N", alpha), "N");
    const RunPlan plan = run_plan(p, 1);

    std::vector<ResultRow> rows;
    for (const auto& method : config.methods) {
        RunPlan mplan = plan;
        if (deterministic(method)) mplan.runs = 1;
        auto part = fan_out(mplan, [&](int run) {
            std::vector<ResultRow> out;
            for (int m : moments) {
                const SingleRun r = single_proposal(method, target, q, method == "igh" ? alpha : n, mplan.seed(run),
                                                    power_function(m));
                Oracle oracle;
                if (target.true_moment_oracle) oracle.mean = Eigen::VectorXd::Constant(1, target.true_moment_oracle(m));
                if (target.log_z) oracle.z = std::exp(*target.log_z);
                const bool sn = method == "snis";
                const Eigen::VectorXd est = sn ? r.estimates.self_normalized : *r.estimates.unnormalized;
                ResultRow row = make_row(method, run, mplan.seed(run), 1, "p=" + std::to_string(m),
                                         sn ? "self_normalized" : "unnormalized", est, r.estimates, oracle, r.counts);
                if (oracle.mean && (*oracle.mean)(0) != 0.0) {
                    row.rel_err = std::abs(est(0) - (*oracle.mean)(0)) / std::abs((*oracle.mean)(0));
                }
                out.push_back(std::move(row));
            }
            return out;
        });
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

// ---- toy 2 -------------------------------------------------------------------

std::vector<ResultRow> run_toy2(const ExperimentConfig& config) {
    require_methods(config, {"igh", "is", "snis", "qmc_is"});
    const json& p = config.params;
    const TargetDensity target = make_gaussian_target(get_double(p, "target_mean", 1.0), get_double(p, "target_sigma", 1.0));
    const double q_mean = get_double(p, "proposal_mean", 1.0);
    const std::vector<double> sigmas =
        get_doubles(p, "sigmas", {0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0});
    const std::vector<int> sizes = get_ints(p, "N", {5});
    for (double s : sigmas)
        if (!(s > 0.0)) bad_field("sigmas", "entries must be positive");
    for (int n : sizes) positive(n, "N");
    const RunPlan plan = run_plan(p, 200);
    const Oracle oracle = oracle_of(target);

    std::vector<ResultRow> rows;
    for (const auto& method : config.methods) {
        RunPlan mplan = plan;
        if (deterministic(method)) mplan.runs = 1;
        auto part = fan_out(mplan, [&](int run) {
            std::vector<ResultRow> out;
            for (int n : sizes) {
                for (double s : sigmas) {
                    const GaussianProposal q(Eigen::VectorXd::Constant(1, q_mean), Eigen::MatrixXd::Constant(1, 1, s * s));
                    const SingleRun r = single_proposal(method, target, q, n, mplan.seed(run), identity_function());
                    const std::string setting = "sigma=" + num(s) + ";N=" + std::to_string(n);
                    out.push_back(make_row(method, run, mplan.seed(run), 1, setting, "unnormalized",
                                           *r.estimates.unnormalized, r.estimates, oracle, r.counts));
                    out.push_back(make_row(method, run, mplan.seed(run), 1, setting, "self_normalized",
                                           r.estimates.self_normalized, r.estimates, oracle, r.counts));
                }
            }
            return out;
        });
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

// ---- multimodal --------------------------------------------------------------

std::vector<ResultRow> run_multimodal(const ExperimentConfig& config) {
    require_methods(config, {"m_pigh", "m_pmc"});
    const json& p = config.params;
    const int m = positive(get_int(p, "M", 25), "M");
    const int alpha = positive(get_int(p, "alpha", 5), "alpha");
    const int n = positive(get_int(p, "N", alpha * alpha), "N");
    const int t_max = positive(get_int(p, "T", 20), "T");
    const std::vector<int> report = get_ints(p, "report_iterations", {});
    const std::vector<double> sigma1 = get_doubles(p, "sigma1", {1.0, 3.0, 5.0});
    const std::vector<double> box = get_doubles(p, "init_box", {-4.0, 4.0});
    const bool adapt_weights = get_bool(p, "adapt_weights", true);
    if (box.size() != 2 || !(box[1] > box[0])) bad_field("init_box", "expected [lo, hi] with lo < hi");
    for (double s : sigma1)
        if (!(s > 0.0)) bad_field("sigma1", "entries must be positive");
    const RunPlan plan = run_plan(p, 100);
    const TargetDensity target = make_gaussian_mixture_5();
    const Oracle oracle = oracle_of(target);

    return fan_out(plan, [&](int run) {
        std::vector<ResultRow> out;
        const std::uint64_t seed = plan.seed(run);
        Rng init_rng(stream_seed(seed, 1));
        std::uniform_real_distribution<double> uniform(box[0], box[1]);
        std::vector<Eigen::VectorXd> means;
        for (int j = 0; j < m; ++j) {
            const double a = uniform(init_rng);
            const double b = uniform(init_rng);
            means.push_back(Eigen::Vector2d(a, b));
        }
        for (double s : sigma1) {
            std::vector<KernelInit> inits;
            for (const auto& mu : means) inits.push_back({mu, s * s * Eigen::MatrixXd::Identity(2, 2)});
            const std::string setting = "sigma1=" + num(s);
            for (const auto& method : config.methods) {
                AdaptTrace trace;
                if (method == "m_pigh") {
                    MpighOptions o;
                    o.alpha = alpha;
                    o.iterations = t_max;
                    o.log_z = target.log_z;
                    trace = m_pigh(target, inits, o, identity_function());
                } else {
                    MpmcOptions o;
                    o.samples = n;
                    o.iterations = t_max;
                    o.log_z = target.log_z;
                    o.seed = stream_seed(seed, 2);
                    o.adapt_weights = adapt_weights;
                    trace = m_pmc(target, inits, o, identity_function());
                }
                for (const auto& rec : trace.iterations) {
                    if (!report.empty() && std::find(report.begin(), report.end(), rec.iteration) == report.end()) continue;
                    out.push_back(make_row(method, run, seed, rec.iteration, setting, "self_normalized",
                                           rec.current.self_normalized, rec.current, oracle, rec.counts));
                }
            }
        }
        return out;
    });
}

// ---- exoplanet and gp ------------------------------------------------------

struct AdaptiveStudy {
    TargetDensity target;
    Oracle oracle;
    Eigen::VectorXd init_lo;
    Eigen::VectorXd init_hi;
    Eigen::MatrixXd sigma0;
    int alpha = 5;
    int iterations = 20;
    Eigen::Index samples = 0;
    Eigen::Index resample = 0;
    std::string setting;
};

std::vector<ResultRow> run_adaptive_study(const ExperimentConfig& config, const AdaptiveStudy& study, int default_runs) {
    require_methods(config, {"am_igh", "am_igh_dm", "amis"});
    const RunPlan plan = run_plan(config.params, default_runs);
    const std::vector<int> report = get_ints(config.params, "report_iterations", {});
    return fan_out(plan, [&](int run) {
        std::vector<ResultRow> out;
        const std::uint64_t seed = plan.seed(run);
        Rng init_rng(stream_seed(seed, 1));
        Eigen::VectorXd mu0(study.init_lo.size());
        for (Eigen::Index i = 0; i < mu0.size(); ++i) {
            std::uniform_real_distribution<double> uniform(study.init_lo(i), study.init_hi(i));
            mu0(i) = uniform(init_rng);
        }
        for (const auto& method : config.methods) {
            AdaptTrace trace;
            if (method == "amis") {
                AmisOptions o;
                o.samples = study.samples;
                o.iterations = study.iterations;
                o.log_z = study.target.log_z;
                o.seed = stream_seed(seed, 2);
                trace = amis(study.target, mu0, study.sigma0, o, identity_function());
            } else {
                AmighOptions o;
                o.alpha = study.alpha;
                o.iterations = study.iterations;
                o.variant = method == "am_igh_dm" ? AMIGHVariant::TemporalDM : AMIGHVariant::LastProposal;
                o.log_z = study.target.log_z;
                o.resample = study.resample;
                o.seed = stream_seed(seed, 3);
                trace = am_igh(study.target, mu0, study.sigma0, o, identity_function());
            }
            auto rows = adaptive_rows(method, run, seed, study.setting, trace, study.oracle, report);
            out.insert(out.end(), rows.begin(), rows.end());
        }
        return out;
    });
}

Eigen::VectorXd box_bound(const json& p, const std::string& key, const std::vector<double>& fallback, int dim) {
    const std::vector<double> v = get_doubles(p, key, fallback);
    if (static_cast<int>(v.size()) == 1) return Eigen::VectorXd::Constant(dim, v[0]);
    if (static_cast<int>(v.size()) != dim) bad_field(key, "expected " + std::to_string(dim) + " entries");
    return to_vector(v);
}

std::vector<ResultRow> run_exoplanet(const ExperimentConfig& config, std::vector<std::string>& warnings) {
    const json& p = config.params;
    const bool full = get_bool(p, "full", false);
    AdaptiveStudy study;
    study.target = target_from_config(config);
    study.init_lo = box_bound(p, "init_lo", {-1.5, 1.0, 100.0, std::numbers::pi / 2.0, 0.1}, 5);
    study.init_hi = box_bound(p, "init_hi", {6.0, 4.0, 400.0, 2.0 * std::numbers::pi, 0.4}, 5);
    if ((study.init_hi.array() <= study.init_lo.array()).any()) bad_field("init_hi", "must exceed init_lo");
    const double scale = get_double(p, "init_scale", 0.5);
    if (!(scale > 0.0)) bad_field("init_scale", "must be positive");
    study.sigma0 = (scale * (study.init_hi - study.init_lo)).array().square().matrix().asDiagonal();
    study.alpha = positive(get_int(p, "alpha", full ? 10 : 5), "alpha");
    study.iterations = positive(get_int(p, "T", 20), "T");
    study.samples = get_int(p, "N", static_cast<int>(grid_size(study.alpha, 5)));
    study.resample = get_int(p, "resample", 0);
    study.setting = "alpha=" + std::to_string(study.alpha);
    if (lookup(p, "reference")) {
        study.oracle.mean = load_reference(resolve(config, "reference", "")).mean;
    } else {
        warnings.push_back("no reference mean configured; squared-error columns omitted");
    }
    return run_adaptive_study(config, study, full ? 100 : 20);
}

std::vector<ResultRow> run_gp(const ExperimentConfig& config, std::vector<std::string>& warnings) {
    const json& p = config.params;
    AdaptiveStudy study;
    study.target = target_from_config(config);
    const int dim = study.target.dim;
    study.init_lo = box_bound(p, "init_lo", {0.5}, dim);
    study.init_hi = box_bound(p, "init_hi", {5.0}, dim);
    if ((study.init_hi.array() <= study.init_lo.array()).any()) bad_field("init_hi", "must exceed init_lo");
    const double var = get_double(p, "init_variance", 0.4);
    if (!(var > 0.0)) bad_field("init_variance", "must be positive");
    study.sigma0 = var * Eigen::MatrixXd::Identity(dim, dim);
    study.alpha = positive(get_int(p, "alpha", 5), "alpha");
    study.iterations = positive(get_int(p, "T", 15), "T");
    study.samples = get_int(p, "N", static_cast<int>(grid_size(study.alpha, dim)));
    study.resample = get_int(p, "resample", 0);
    study.setting = "alpha=" + std::to_string(study.alpha);
    if (lookup(p, "reference")) {
        study.oracle.mean = load_reference(resolve(config, "reference", "")).mean;
    } else {
        warnings.push_back("no reference mean configured; squared-error columns omitted");
    }
    return run_adaptive_study(config, study, 20);
}

// ---- custom ------------------------------------------------------------------

TestFunction function_from(const std::string& spec) {
    if (spec == "mean") return identity_function();
    if (spec == "one") return constant_function();
    if (spec.rfind("moment:", 0) == 0) {
        try {
            return power_function(std::stoi(spec.substr(7)));
        } catch (const std::exception&) {
        }
    }
    bad_field("f", "'" + spec + "' is not one of: mean, one, moment:<p>");
}

std::vector<GaussianProposal> proposals_from(const json& p, int dim) {
    const json* list = lookup(p, "proposals");
    if (!list || !list->is_array() || list->empty()) bad_field("proposals", "expected a non-empty list of {mean, cov}");
    std::vector<GaussianProposal> out;
    for (const auto& item : *list) {
        const auto mean = get_vector(item, "mean");
        const auto cov = get_matrix(item, "cov");
        if (!mean || !cov) bad_field("proposals", "each proposal needs mean and cov");
        if (mean->size() != dim || cov->rows() != dim || cov->cols() != dim) {
            bad_field("proposals", "proposal shapes do not match the target dimension " + std::to_string(dim));
        }
        out.emplace_back(*mean, *cov);
    }
    return out;
}

std::vector<ResultRow> run_custom(const ExperimentConfig& config, std::vector<std::string>& warnings) {
    const json& p = config.params;
    const TargetDensity target = target_from_config(config);
    const std::vector<GaussianProposal> proposals = proposals_from(p, target.dim);
    const int alpha = positive(get_int(p, "alpha", 5), "alpha");
    const int n = positive(get_int(p, "N", static_cast<int>(grid_size(alpha, target.dim))), "N");
    const int t_max = positive(get_int(p, "T", 10), "T");
    const TestFunction f = function_from(get_string(p, "f", "mean"));
    Oracle oracle = oracle_of(target);
    if (auto ref = get_vector(p, "reference_mean")) oracle.mean = *ref;
    if (lookup(p, "reference")) oracle.mean = load_reference(resolve(config, "reference", "")).mean;
    if (get_string(p, "f", "mean") != "mean") oracle.mean.reset();
    if (!oracle.mean) warnings.push_back("no oracle for the estimated quantity; squared-error columns omitted");
    const RunPlan plan = run_plan(p, 1);
    const Eigen::Index m = static_cast<Eigen::Index>(proposals.size());

    std::vector<ResultRow> rows;
    for (const auto& method : config.methods) {
        RunPlan mplan = plan;
        if (deterministic(method)) mplan.runs = 1;
        auto part = fan_out(mplan, [&](int run) -> std::vector<ResultRow> {
            const std::uint64_t seed = mplan.seed(run);
            if (method == "igh" || method == "is" || method == "snis" || method == "qmc_is") {
                const SingleRun r = single_proposal(method, target, proposals.front(), method == "igh" ? alpha : n,
                                                    seed, f);
                std::vector<ResultRow> out;
                if (r.estimates.unnormalized && method != "snis") {
                    out.push_back(make_row(method, run, seed, 1, "", "unnormalized", *r.estimates.unnormalized,
                                           r.estimates, oracle, r.counts));
                }
                out.push_back(make_row(method, run, seed, 1, "", "self_normalized", r.estimates.self_normalized,
                                       r.estimates, oracle, r.counts));
                return out;
            }
            if (method == "sm_igh" || method == "dm_igh") {
                const GridRule grid = tensor_grid(hermite_rule(alpha), target.dim);
                std::vector<PointSet> sets;
                for (Eigen::Index j = 0; j < m; ++j) {
                    const auto& q = proposals[static_cast<std::size_t>(j)];
                    sets.push_back(map_to_gaussian_factor(grid, q.mu(), q.chol(), static_cast<int>(j)));
                }
                const WeightedSet ws =
                    migh_weights(sets, target, proposals, method == "sm_igh" ? MIGHScheme::SM : MIGHScheme::DM);
                const Estimates e = migh_estimate(ws, f, target.log_z, m, grid.size());
                std::vector<ResultRow> out;
                if (e.unnormalized) {
                    out.push_back(make_row(method, run, seed, 1, "", "unnormalized", *e.unnormalized, e, oracle, ws.counts));
                }
                out.push_back(make_row(method, run, seed, 1, "", "self_normalized", e.self_normalized, e, oracle, ws.counts));
                return out;
            }
            AdaptTrace trace;
            if (method == "m_pigh" || method == "m_pmc") {
                std::vector<KernelInit> inits;
                for (const auto& q : proposals) inits.push_back({q.mu(), q.sigma()});
                if (method == "m_pigh") {
                    MpighOptions o;
                    o.alpha = alpha;
                    o.iterations = t_max;
                    o.log_z = target.log_z;
                    trace = m_pigh(target, inits, o, f);
                } else {
                    MpmcOptions o;
                    o.samples = n;
                    o.iterations = t_max;
                    o.log_z = target.log_z;
                    o.seed = stream_seed(seed, 2);
                    o.adapt_weights = get_bool(p, "adapt_weights", false);
                    trace = m_pmc(target, inits, o, f);
                }
            } else if (method == "amis") {
                AmisOptions o;
                o.samples = n;
                o.iterations = t_max;
                o.log_z = target.log_z;
                o.seed = stream_seed(seed, 2);
                trace = amis(target, proposals.front().mu(), proposals.front().sigma(), o, f);
            } else {
                AmighOptions o;
                o.alpha = alpha;
                o.iterations = t_max;
                o.variant = method == "am_igh_dm" ? AMIGHVariant::TemporalDM : AMIGHVariant::LastProposal;
                o.log_z = target.log_z;
                o.resample = get_int(p, "resample", 0);
                o.seed = stream_seed(seed, 3);
                trace = am_igh(target, proposals.front().mu(), proposals.front().sigma(), o, f);
            }
            return adaptive_rows(method, run, seed, "", trace, oracle, {});
        });
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace

// ---- public API --------------------------------------------------------------

std::optional<double> ResultRow::sqerr_mean() const {
    if (!sqerr) return std::nullopt;
    return sqerr->mean();
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    c.params = j;
    c.base_dir = base_dir;
    c.experiment = get_string(j, "experiment", "");
    if (std::find(kExperimentNames.begin(), kExperimentNames.end(), c.experiment) == kExperimentNames.end()) {
        bad_field("experiment", "'" + c.experiment + "' is not one of: " + join(kExperimentNames));
    }
    const json* m = lookup(j, "method");
    if (m && m->is_string()) {
        c.methods = {m->get<std::string>()};
    } else if (m && m->is_array()) {
        for (const auto& e : *m) {
            if (!e.is_string()) bad_field("method", "expected method names");
            c.methods.push_back(e.get<std::string>());
        }
    } else if (m) {
        bad_field("method", "expected a method name or a list of names");
    }
    if (c.methods.empty()) {
        static const std::map<std::string, std::vector<std::string>> defaults{
            {"toy1", {"igh"}},          {"toy2", {"igh", "is", "qmc_is"}},        {"multimodal", {"m_pigh", "m_pmc"}},
            {"exoplanet", {"am_igh", "am_igh_dm", "amis"}}, {"gp", {"am_igh", "am_igh_dm", "amis"}}, {"custom", {"igh"}}};
        c.methods = defaults.at(c.experiment);
    }
    for (const auto& name : c.methods) {
        if (std::find(kMethodNames.begin(), kMethodNames.end(), name) == kMethodNames.end()) {
            bad_field("method", "'" + name + "' is not one of: " + join(kMethodNames));
        }
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

Report run_experiment(const ExperimentConfig& config) {
    Report report;
    report.config = config;
    std::vector<ResultRow> rows;
    try {
        if (config.experiment == "toy1") rows = run_toy1(config);
        else if (config.experiment == "toy2") rows = run_toy2(config);
        else if (config.experiment == "multimodal") rows = run_multimodal(config);
        else if (config.experiment == "exoplanet") rows = run_exoplanet(config, report.warnings);
        else if (config.experiment == "gp") rows = run_gp(config, report.warnings);
        else rows = run_custom(config, report.warnings);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    std::vector<ResultRow> agg = aggregate(rows);
    report.rows = std::move(rows);
    report.rows.insert(report.rows.end(), agg.begin(), agg.end());
    return report;
}

std::vector<ResultRow> aggregate(const std::vector<ResultRow>& rows) {
    using Key = std::tuple<std::string, std::string, std::string, int>;
    std::map<Key, std::size_t> index;
    std::vector<Key> order;
    std::vector<std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) {
        if (r.run < 0) continue;
        Key k{r.method, r.setting, r.estimator, r.iteration};
        auto [it, inserted] = index.try_emplace(k, groups.size());
        if (inserted) {
            order.push_back(k);
            groups.emplace_back();
        }
        groups[it->second].push_back(&r);
    }
    std::vector<ResultRow> out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& members = groups[g];
        const double count = static_cast<double>(members.size());
        ResultRow a = *members.front();
        a.run = -1;
        a.seed = 0;
        a.estimate.setZero();
        a.z_hat = 0.0;
        a.ess_igh = 0.0;
        if (a.sqerr) a.sqerr->setZero();
        if (a.rel_err) a.rel_err = 0.0;
        if (a.z_sqerr) a.z_sqerr = 0.0;
        for (const ResultRow* r : members) {
            a.estimate += r->estimate / count;
            a.z_hat += r->z_hat / count;
            a.ess_igh += r->ess_igh / count;
            if (a.sqerr && r->sqerr) *a.sqerr += *r->sqerr / count;
            if (a.rel_err && r->rel_err) *a.rel_err += *r->rel_err / count;
            if (a.z_sqerr && r->z_sqerr) *a.z_sqerr += *r->z_sqerr / count;
        }
        out.push_back(std::move(a));
    }
    return out;
}

const ResultRow* find_row(const std::vector<ResultRow>& rows, const std::string& method, const std::string& setting,
                          const std::string& estimator, int iteration) {
    for (const auto& r : rows) {
        if (r.run < 0 && r.method == method && r.setting == setting && r.estimator == estimator && r.iteration == iteration) {
            return &r;
        }
    }
    return nullptr;
}

void write_report(const Report& report, std::ostream& out, const std::string& timestamp) {
    Eigen::Index dim = 0;
    bool has_sqerr = false, has_rel = false, has_z = false;
    for (const auto& r : report.rows) {
        dim = std::max(dim, r.estimate.size());
        has_sqerr = has_sqerr || r.sqerr.has_value();
        has_rel = has_rel || r.rel_err.has_value();
        has_z = has_z || r.z_sqerr.has_value();
    }
    json echo = report.config.params;
    // worker count does not change results
    echo.erase("threads");
    out << "# iq experiment report\n";
    out << "# generated: " << (timestamp.empty() ? "-" : timestamp) << "\n";
    out << "# experiment: " << report.config.experiment << "\n";
    out << "# config: " << echo.dump() << "\n";
    out << "# methods: " << join(report.config.methods) << "\n";
    out << "# rows with run=all are means over runs; sqerr columns of those rows are MSEs\n";
    for (const auto& w : report.warnings) out << "# warning: " << w << "\n";
    if (!has_sqerr) out << "# warning: no oracle available; sqerr columns omitted\n";

    std::vector<std::string> cols{"method", "run", "seed", "iteration", "setting", "estimator"};
    for (Eigen::Index k = 0; k < dim; ++k) cols.push_back("est_" + std::to_string(k + 1));
    if (has_sqerr) {
        for (Eigen::Index k = 0; k < dim; ++k) cols.push_back("sqerr_" + std::to_string(k + 1));
        cols.push_back("sqerr_mean");
    }
    if (has_rel) cols.push_back("rel_err");
    cols.push_back("z_hat");
    if (has_z) cols.push_back("z_sqerr");
    for (const char* c : {"ess_igh", "target_evals", "proposal_evals", "denominator_evals"}) cols.emplace_back(c);
    out << join(cols, ",") << "\n";
    std::string line;
    for (const auto& r : report.rows) {
        std::ostringstream s;
        s << r.method << ',' << (r.run < 0 ? std::string("all") : std::to_string(r.run)) << ','
          << (r.run < 0 ? std::string() : std::to_string(r.seed)) << ',' << r.iteration << ',' << r.setting << ','
          << r.estimator;
        for (Eigen::Index k = 0; k < dim; ++k) s << ',' << (k < r.estimate.size() ? num17(r.estimate(k)) : "");
        if (has_sqerr) {
            for (Eigen::Index k = 0; k < dim; ++k) s << ',' << (r.sqerr && k < r.sqerr->size() ? num17((*r.sqerr)(k)) : "");
            s << ',' << (r.sqerr ? num17(r.sqerr->mean()) : "");
        }
        if (has_rel) s << ',' << (r.rel_err ? num17(*r.rel_err) : "");
        s << ',' << num17(r.z_hat);
        if (has_z) s << ',' << (r.z_sqerr ? num17(*r.z_sqerr) : "");
        s << ',' << num17(r.ess_igh) << ',' << r.counts.target_evals << ',' << r.counts.proposal_evals << ','
          << r.counts.denominator_evals;
        out << s.str() << "\n";
    }
}

// ---- data files --------------------------------------------------------------

Eigen::Index CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<Eigen::Index>(i);
    throw ConfigError("CSV has no column '" + name + "' (columns: " + join(columns) + ")");
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file " + path.string());
    CsvTable table;
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv_line(line);
        if (table.columns.empty()) {
            table.columns = cells;
            continue;
        }
        if (cells.size() != table.columns.size()) {
            throw ConfigError("data file " + path.string() + ": row with " + std::to_string(cells.size()) +
                              " cells, header has " + std::to_string(table.columns.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw ConfigError("data file " + path.string() + ": '" + c + "' is not a number");
            }
        }
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    return table;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns, const Eigen::MatrixXd& values) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << join(columns, ",") << "\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index k = 0; k < values.cols(); ++k) out << (k ? "," : "") << num17(values(i, k));
        out << "\n";
    }
}

ExoplanetData load_exoplanet_data(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    return {t.values.col(t.column("t")), t.values.col(t.column("y"))};
}

GpData load_gp_data(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    int l = 0;
    while (std::find(t.columns.begin(), t.columns.end(), "z_" + std::to_string(l + 1)) != t.columns.end()) ++l;
    if (l == 0) throw ConfigError("GP data file " + path.string() + " has no z_1 column");
    GpData d;
    d.inputs.resize(t.values.rows(), l);
    for (int k = 0; k < l; ++k) d.inputs.col(k) = t.values.col(t.column("z_" + std::to_string(k + 1)));
    d.outputs = t.values.col(t.column("y"));
    return d;
}

Reference load_reference(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open reference file " + path.string());
    Reference r;
    try {
        const json j = json::parse(in);
        const auto mean = j.at("mean").get<std::vector<double>>();
        r.mean = to_vector(mean);
        r.provenance = j.value("provenance", json::object());
    } catch (const json::exception& e) {
        throw ConfigError("reference file " + path.string() + ": " + e.what());
    }
    return r;
}

TargetDensity target_from_config(const ExperimentConfig& config) {
    const json& p = config.params;
    std::string kind = config.experiment;
    json spec = p;
    if (kind == "custom") {
        const json* t = lookup(p, "target");
        if (!t || !t->is_object()) bad_field("target", "expected an object with a 'kind' field");
        spec = *t;
        kind = get_string(spec, "kind", "");
    }
    if (kind == "exoplanet") {
        const ExoplanetData d = load_exoplanet_data(resolve(config, "data", "data/exoplanet.csv"));
        const double var = get_double(p, "sigma_o2", 2.0);
        if (!(var > 0.0)) bad_field("sigma_o2", "must be positive");
        const ExoplanetPriors priors = get_bool(p, "swap_e_omega", false) ? ExoplanetPriors::swapped_e_omega() : ExoplanetPriors{};
        return make_exoplanet(d.times, d.obs, std::sqrt(var), priors);
    }
    if (kind == "gp") {
        const GpData d = load_gp_data(resolve(config, "data", "data/gp.csv"));
        return make_gp_posterior(d.inputs, d.outputs, get_double(p, "beta", kGpPriorExponent));
    }
    if (kind == "gaussian") {
        const auto mean = get_vector(spec, "mean");
        const auto cov = get_matrix(spec, "cov");
        if (!mean || !cov) bad_field("target", "gaussian needs mean and cov");
        return make_gaussian_target(*mean, *cov);
    }
    if (kind == "nakagami") {
        return make_nakagami(get_double(spec, "mu", 0.0), get_double(spec, "sigma", 1.0), get_double(spec, "r", 4.0));
    }
    if (kind == "multimodal") return make_gaussian_mixture_5();
    bad_field("target.kind", "'" + kind + "' is not one of: gaussian, nakagami, multimodal, exoplanet, gp");
}

Reference compute_reference(const TargetDensity& target, const ReferenceOptions& options) {
    if (options.pilot_mean.size() != target.dim) throw ShapeError("pilot mean does not match the target dimension");
    AmisOptions pilot;
    pilot.samples = options.pilot_samples;
    pilot.iterations = options.pilot_iterations;
    pilot.seed = stream_seed(options.seed, 7);
    const AdaptTrace trace = amis(target, options.pilot_mean, options.pilot_cov, pilot, identity_function());
    const GaussianProposal q =
        GaussianProposal::regularized(trace.last().means.front(), options.inflation * trace.last().covariances.front());

    Rng rng(options.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::VectorXd shift(target.dim);
    for (Eigen::Index k = 0; k < shift.size(); ++k) shift(k) = uniform(rng);

    constexpr Eigen::Index kChunk = 500'000;
    double log_scale = -std::numeric_limits<double>::infinity();
    double s0 = 0.0, s2 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(target.dim);
    for (Eigen::Index offset = 0; offset < options.evaluations; offset += kChunk) {
        const Eigen::Index n = std::min<Eigen::Index>(kChunk, options.evaluations - offset);
        const PointSet ps = qmc_point_set(q, n, shift, offset);
        Eigen::VectorXd log_w = target.log_unnorm_columns(ps.points) - q.logpdf_columns(ps.points);
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::isnan(log_w(i))) log_w(i) = -std::numeric_limits<double>::infinity();
        const double chunk_max = log_w.maxCoeff();
        if (!std::isfinite(chunk_max)) continue;
        if (chunk_max > log_scale) {
            const double r = std::isfinite(log_scale) ? std::exp(log_scale - chunk_max) : 0.0;
            s0 *= r;
            s1 *= r;
            s2 *= r * r;
            log_scale = chunk_max;
        }
        const Eigen::VectorXd w = exp_of(log_w.array() - log_scale).matrix();
        s0 += w.sum();
        s1 += ps.points * w;
        s2 += w.squaredNorm();
    }
    if (!(s0 > 0.0)) throw DegenerateWeightsError("reference run produced no positive weights");
    Reference ref;
    ref.mean = s1 / s0;
    auto to_list = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    std::vector<std::vector<double>> cov;
    for (Eigen::Index i = 0; i < q.sigma().rows(); ++i) cov.push_back(to_list(q.sigma().row(i).transpose()));
    ref.provenance = {
        {"method", "randomized-QMC importance sampling (Halton, Cranley-Patterson shift)"},
        {"evaluations", options.evaluations},
        {"seed", options.seed},
        {"proposal_mean", to_list(q.mu())},
        {"proposal_cov", cov},
        {"inflation", options.inflation},
        {"pilot", {{"method", "amis"}, {"samples", options.pilot_samples}, {"iterations", options.pilot_iterations},
                   {"mean", to_list(options.pilot_mean)}}},
        {"classic_ess", s0 * s0 / s2},
        {"log_z_hat", log_scale + std::log(s0 / static_cast<double>(options.evaluations))},
    };
    return ref;
}

}  // namespace iq
