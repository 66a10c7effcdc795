// iq: command-line front end for the importance quadrature library.

#include "iq/error.hpp"
#include "iq/experiments.hpp"
#include "iq/quad_rules.hpp"
#include "iq/targets.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw iq::ConfigError("'" + cell + "' is not a number");
        }
    }
    return out;
}

// "a,b;c,d" -> [[a,b],[c,d]]
json parse_matrix(const std::string& text) {
    json rows = json::array();
    std::stringstream ss(text);
    std::string row;
    while (std::getline(ss, row, ';')) rows.push_back(parse_list(row));
    return rows;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void emit(const iq::Report& report, const std::string& out_path, bool timestamp) {
    const std::string stamp = timestamp ? utc_now() : std::string();
    if (out_path.empty() || out_path == "-") {
        iq::write_report(report, std::cout, stamp);
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw iq::ConfigError("cannot write output file " + out_path);
    iq::write_report(report, out, stamp);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Importance quadrature (IGH) estimators, adaptive schemes and the paper's experiments"};
    app.require_subcommand(1);

    // nodes
    auto* nodes = app.add_subcommand("nodes", "Print quadrature nodes and normalized weights as CSV (x_1..x_d, v)");
    std::string rule = "hermite";
    int alpha = 5, dim = 1;
    std::string mean_text, cov_text, nodes_out;
    nodes->add_option("--rule", rule, "hermite, legendre, chebyshev, chebyshev2 or laguerre");
    nodes->add_option("--alpha", alpha, "Points per dimension");
    nodes->add_option("--dim", dim, "Dimension of the tensor grid");
    nodes->add_option("--mean", mean_text, "Map Hermite nodes to N(mean, cov): comma list");
    nodes->add_option("--cov", cov_text, "Covariance rows separated by ';'");
    nodes->add_option("-o,--out", nodes_out, "Output file (default stdout)");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "One estimate on a built-in or file-backed target");
    std::string target_kind = "gaussian", data_path, method = "igh", f_spec = "mean", est_out;
    std::string target_mean, target_cov;
    std::vector<std::string> prop_means, prop_covs;
    double nak_r = 4.0, nak_sigma = 1.0, nak_mu = 0.0;
    int est_alpha = 5, est_n = 0, est_t = 10, est_seeds = 1, est_seed = 1;
    estimate->add_option("--target", target_kind, "gaussian, nakagami, multimodal, exoplanet or gp");
    estimate->add_option("--data", data_path, "Data CSV for exoplanet (t,y) or gp (z_1..z_L,y)");
    estimate->add_option("--target-mean", target_mean, "Gaussian target mean: comma list");
    estimate->add_option("--target-cov", target_cov, "Gaussian target covariance rows separated by ';'");
    estimate->add_option("--r", nak_r, "Nakagami exponent");
    estimate->add_option("--nak-mu", nak_mu, "Nakagami location");
    estimate->add_option("--nak-sigma", nak_sigma, "Nakagami scale");
    estimate->add_option("--method", method, "igh, sm_igh, dm_igh, am_igh, am_igh_dm, m_pigh, is, snis, qmc_is, amis, m_pmc");
    estimate->add_option("--mean", prop_means, "Proposal mean (repeat for several proposals)")->required();
    estimate->add_option("--cov", prop_covs, "Proposal covariance (repeat, rows separated by ';')")->required();
    estimate->add_option("--alpha", est_alpha, "Quadrature points per dimension");
    estimate->add_option("--N", est_n, "Sample count for sampling methods (default alpha^d)");
    estimate->add_option("--T", est_t, "Iterations for adaptive methods");
    estimate->add_option("--f", f_spec, "mean, one or moment:<p>");
    estimate->add_option("--seeds", est_seeds, "Independent runs");
    estimate->add_option("--seed", est_seed, "First seed");
    estimate->add_option("-o,--out", est_out, "Output file (default stdout)");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "Run an experiment described by a JSON config");
    std::string exp_name, config_path, exp_out;
    int exp_seeds = 0, exp_threads = 0;
    bool full = false, no_timestamp = false;
    experiment->add_option("name", exp_name, "toy1, toy2, multimodal, exoplanet, gp or custom")->required();
    experiment->add_option("--config", config_path, "Config file")->required();
    experiment->add_option("-o,--out", exp_out, "Output CSV (default: config 'output' or stdout)");
    experiment->add_option("--seeds", exp_seeds, "Override the number of runs");
    experiment->add_option("--threads", exp_threads, "Worker threads");
    experiment->add_flag("--full", full, "Paper-scale settings where the experiment defines them");
    experiment->add_flag("--no-timestamp", no_timestamp, "Omit the generation time from the header");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run a config once per value of one numeric parameter");
    std::string sweep_config, sweep_param, sweep_grid, sweep_out;
    bool sweep_no_timestamp = false;
    sweep->add_option("--config", sweep_config, "Config file")->required();
    sweep->add_option("--param", sweep_param, "Config key to vary")->required();
    sweep->add_option("--grid", sweep_grid, "Comma-separated values")->required();
    sweep->add_option("-o,--out", sweep_out, "Output CSV (default stdout)");
    sweep->add_flag("--no-timestamp", sweep_no_timestamp, "Omit the generation time from the header");

    // reference
    auto* reference = app.add_subcommand("reference", "Brute-force posterior mean for an exoplanet or gp config");
    std::string ref_config, ref_out;
    double ref_evals = 1e7, ref_inflation = 4.0;
    int ref_seed = 11;
    reference->add_option("--config", ref_config, "Experiment config naming the target and data")->required();
    reference->add_option("-o,--out", ref_out, "Output JSON")->required();
    reference->add_option("--evals", ref_evals, "Target evaluations");
    reference->add_option("--inflation", ref_inflation, "Covariance inflation of the pilot proposal");
    reference->add_option("--seed", ref_seed, "Seed of the shift and the pilot");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Write a synthetic data set (exoplanet or gp)");
    std::string sim_kind, sim_out;
    int sim_seed = 1, sim_count = 0, sim_l = 2;
    simulate->add_option("kind", sim_kind, "exoplanet or gp")->required();
    simulate->add_option("-o,--out", sim_out, "Output CSV")->required();
    simulate->add_option("--seed", sim_seed, "Data seed");
    simulate->add_option("--count", sim_count, "Observations (default 40 exoplanet, 50 gp)");
    simulate->add_option("--L", sim_l, "GP input dimension");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*nodes) {
            const iq::Rule1D r = rule == "hermite" ? iq::hermite_rule(alpha)
                                                   : iq::classical_rule(iq::rule_kind_from_string(rule), alpha);
            const iq::GridRule grid = iq::tensor_grid(r, dim);
            Eigen::MatrixXd pts = grid.points;
            if (!mean_text.empty() || !cov_text.empty()) {
                if (r.kind != iq::RuleKind::Hermite) throw iq::ConfigError("--mean/--cov apply to the hermite rule only");
                const auto m = parse_list(mean_text.empty() ? std::string("0") : mean_text);
                Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
                Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(dim, dim);
                if (!cov_text.empty()) {
                    const json rows = parse_matrix(cov_text);
                    sigma.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                        if (rows[i].size() != rows.size()) throw iq::ConfigError("--cov must be square");
                        for (std::size_t k = 0; k < rows.size(); ++k)
                            sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
                    }
                }
                if (mu.size() != dim || sigma.rows() != dim) throw iq::ConfigError("--mean/--cov do not match --dim");
                pts = iq::map_to_gaussian(grid, mu, sigma).points;
            }
            std::vector<std::string> cols;
            for (int k = 0; k < dim; ++k) cols.push_back("x_" + std::to_string(k + 1));
            cols.push_back("v");
            Eigen::MatrixXd table(grid.size(), dim + 1);
            table.leftCols(dim) = pts.transpose();
            table.col(dim) = grid.weights;
            if (nodes_out.empty()) {
                std::cout << "x_1";
                for (int k = 1; k < dim; ++k) std::cout << ",x_" << k + 1;
                std::cout << ",v\n";
                char buf[64];
                for (Eigen::Index i = 0; i < table.rows(); ++i) {
                    for (Eigen::Index k = 0; k < table.cols(); ++k) {
                        std::snprintf(buf, sizeof buf, "%.17g", table(i, k));
                        std::cout << (k ? "," : "") << buf;
                    }
                    std::cout << "\n";
                }
            } else {
                iq::write_csv(nodes_out, cols, table);
            }
            return 0;
        }
        if (*estimate) {
            if (prop_means.size() != prop_covs.size()) throw iq::ConfigError("give one --cov per --mean");
            json cfg{{"experiment", "custom"}, {"method", method}, {"alpha", est_alpha}, {"T", est_t},
                     {"f", f_spec},            {"seeds", est_seeds}, {"seed_base", est_seed}};
            if (est_n > 0) cfg["N"] = est_n;
            json target{{"kind", target_kind}};
            if (target_kind == "gaussian") {
                if (target_mean.empty() || target_cov.empty()) throw iq::ConfigError("gaussian target needs --target-mean and --target-cov");
                target["mean"] = parse_list(target_mean);
                target["cov"] = parse_matrix(target_cov);
            } else if (target_kind == "nakagami") {
                target["mu"] = nak_mu;
                target["sigma"] = nak_sigma;
                target["r"] = nak_r;
            }
            cfg["target"] = target;
            if (!data_path.empty()) cfg["data"] = data_path;
            json props = json::array();
            for (std::size_t i = 0; i < prop_means.size(); ++i)
                props.push_back({{"mean", parse_list(prop_means[i])}, {"cov", parse_matrix(prop_covs[i])}});
            cfg["proposals"] = props;
            emit(iq::run_experiment(iq::parse_config(cfg)), est_out, false);
            return 0;
        }
        if (*experiment) {
            iq::ExperimentConfig cfg = iq::load_config(config_path);
            if (cfg.experiment != exp_name) {
                throw iq::ConfigError("config " + config_path + " describes experiment '" + cfg.experiment +
                                      "', not '" + exp_name + "'");
            }
            if (exp_seeds > 0) cfg.params["seeds"] = exp_seeds;
            if (exp_threads > 0) cfg.params["threads"] = exp_threads;
            if (full) cfg.params["full"] = true;
            std::string out = exp_out;
            if (out.empty() && cfg.params.contains("output")) out = cfg.params["output"].get<std::string>();
            emit(iq::run_experiment(cfg), out, !no_timestamp);
            return 0;
        }
        if (*sweep) {
            const iq::ExperimentConfig base = iq::load_config(sweep_config);
            iq::Report merged;
            merged.config = base;
            for (double value : parse_list(sweep_grid)) {
                iq::ExperimentConfig cfg = base;
                cfg.params[sweep_param] = value == std::floor(value) && std::abs(value) < 1e9
                                              ? json(static_cast<long long>(value))
                                              : json(value);
                iq::Report r = iq::run_experiment(cfg);
                std::ostringstream tag;
                tag << sweep_param << "=" << value;
                for (auto& row : r.rows) row.setting = row.setting.empty() ? tag.str() : tag.str() + ";" + row.setting;
                merged.rows.insert(merged.rows.end(), r.rows.begin(), r.rows.end());
                merged.warnings.insert(merged.warnings.end(), r.warnings.begin(), r.warnings.end());
            }
            merged.config.params["sweep"] = {{"param", sweep_param}, {"grid", sweep_grid}};
            emit(merged, sweep_out, !sweep_no_timestamp);
            return 0;
        }
        if (*reference) {
            const iq::ExperimentConfig cfg = iq::load_config(ref_config);
            const iq::TargetDensity target = iq::target_from_config(cfg);
            iq::ReferenceOptions opt;
            opt.evaluations = static_cast<std::int64_t>(ref_evals);
            opt.inflation = ref_inflation;
            opt.seed = static_cast<std::uint64_t>(ref_seed);
            const json& p = cfg.params;
            const auto bound = [&](const char* key) {
                if (!p.contains(key)) return std::vector<double>{};
                if (p[key].is_number()) return std::vector<double>(static_cast<std::size_t>(target.dim), p[key].get<double>());
                return p[key].get<std::vector<double>>();
            };
            const auto lo = bound("init_lo");
            const auto hi = bound("init_hi");
            if (p.contains("pilot_mean")) {
                const auto m = p["pilot_mean"].get<std::vector<double>>();
                opt.pilot_mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
            } else if (lo.size() == static_cast<std::size_t>(target.dim) && hi.size() == lo.size()) {
                opt.pilot_mean.resize(target.dim);
                for (int k = 0; k < target.dim; ++k) opt.pilot_mean(k) = 0.5 * (lo[static_cast<std::size_t>(k)] + hi[static_cast<std::size_t>(k)]);
            } else {
                throw iq::ConfigError("reference needs 'pilot_mean' or per-coordinate 'init_lo'/'init_hi' in the config");
            }
            if (p.contains("pilot_variance")) {
                const auto v = p["pilot_variance"].get<std::vector<double>>();
                if (v.size() != static_cast<std::size_t>(target.dim)) throw iq::ConfigError("pilot_variance needs one entry per dimension");
                opt.pilot_cov = Eigen::Map<const Eigen::VectorXd>(v.data(), target.dim).asDiagonal();
            } else {
                opt.pilot_cov = Eigen::MatrixXd::Identity(target.dim, target.dim);
            }
            iq::Reference ref = iq::compute_reference(target, opt);
            std::ofstream out(ref_out);
            if (!out) throw iq::ConfigError("cannot write " + ref_out);
            json doc{{"mean", std::vector<double>(ref.mean.data(), ref.mean.data() + ref.mean.size())},
                     {"provenance", ref.provenance}};
            doc["provenance"]["config"] = ref_config;
            doc["provenance"]["generated_by"] = "iq reference";
            out << doc.dump(2) << "\n";
            return 0;
        }
        if (*simulate) {
            iq::Rng rng(static_cast<std::uint64_t>(sim_seed));
            if (sim_kind == "exoplanet") {
                const int count = sim_count > 0 ? sim_count : 40;
                const Eigen::VectorXd times = iq::simulate_exoplanet_times(count, 365.0, rng);
                Eigen::VectorXd truth(5);
                for (int k = 0; k < 5; ++k) truth(k) = iq::kExoplanetTruth[static_cast<std::size_t>(k)];
                const Eigen::VectorXd obs = iq::simulate_exoplanet_obs(times, truth, std::sqrt(2.0), rng);
                Eigen::MatrixXd table(count, 2);
                table << times, obs;
                iq::write_csv(sim_out, {"t", "y"}, table);
            } else if (sim_kind == "gp") {
                const int count = sim_count > 0 ? sim_count : 50;
                Eigen::VectorXd delta(sim_l);
                for (int k = 0; k < sim_l; ++k) delta(k) = k % 2 == 0 ? 1.0 : 3.0;
                const iq::GpData d = iq::simulate_gp_data(count, delta, 0.5, 10.0, rng);
                std::vector<std::string> cols;
                for (int k = 0; k < sim_l; ++k) cols.push_back("z_" + std::to_string(k + 1));
                cols.push_back("y");
                Eigen::MatrixXd table(count, sim_l + 1);
                table << d.inputs, d.outputs;
                iq::write_csv(sim_out, cols, table);
            } else {
                throw iq::ConfigError("simulate kind must be exoplanet or gp, got '" + sim_kind + "'");
            }
            return 0;
        }
    } catch (const iq::ConfigError& e) {
        std::cerr << "iq: " << e.what() << "\n";
        return 2;
    } catch (const iq::DegenerateWeightsError& e) {
        std::cerr << "iq: degenerate estimate: " << e.what() << "\n";
        return 3;
    } catch (const iq::Error& e) {
        std::cerr << "iq: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "iq: config: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
