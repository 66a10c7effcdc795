#pragma once

// Experiment harness behind the `iq` tool.
//
// A config is one JSON object; `experiment` picks the study (toy1, toy2,
// multimodal, exoplanet, gp, custom) and `method` one method name or a list.
// Every other key is experiment specific and documented in README.md. Paths
// inside a config are resolved against the config file's directory.

#include "iq/adapt.hpp"
#include "iq/igh.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace iq {

inline const std::vector<std::string> kExperimentNames{"toy1", "toy2", "multimodal", "exoplanet", "gp", "custom"};
inline const std::vector<std::string> kMethodNames{"igh",       "sm_igh", "dm_igh", "am_igh", "am_igh_dm", "m_pigh",
                                                   "is",        "snis",   "qmc_is", "amis",   "m_pmc"};

struct ExperimentConfig {
    std::string experiment;
    std::vector<std::string> methods;
    nlohmann::json params;
    std::filesystem::path base_dir;
};

/// Validates names and types; throws ConfigError naming the field and the allowed values.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct ResultRow {
    std::string method;
    /// -1 marks an aggregate row (means over runs).
    int run = 0;
    std::uint64_t seed = 0;
    int iteration = 1;
    std::string setting;
    std::string estimator;
    Eigen::VectorXd estimate;
    std::optional<Eigen::VectorXd> sqerr;
    std::optional<double> rel_err;
    double z_hat = 0.0;
    std::optional<double> z_sqerr;
    double ess_igh = 0.0;
    EvalCounts counts;

    std::optional<double> sqerr_mean() const;
};

struct Report {
    ExperimentConfig config;
    std::vector<ResultRow> rows;
    std::vector<std::string> warnings;
};

Report run_experiment(const ExperimentConfig& config);

/// Per-group means over runs, keyed by (method, setting, estimator, iteration).
std::vector<ResultRow> aggregate(const std::vector<ResultRow>& rows);

/// Writes the metadata header and the CSV. `timestamp` is the only line allowed to vary.
void write_report(const Report& report, std::ostream& out, const std::string& timestamp = {});

/// Finds the aggregate row for a group, or nullptr.
const ResultRow* find_row(const std::vector<ResultRow>& rows, const std::string& method, const std::string& setting,
                          const std::string& estimator, int iteration);

struct CsvTable {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;

    Eigen::Index column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns, const Eigen::MatrixXd& values);

struct ExoplanetData {
    Eigen::VectorXd times;
    Eigen::VectorXd obs;
};

ExoplanetData load_exoplanet_data(const std::filesystem::path& path);
GpData load_gp_data(const std::filesystem::path& path);

struct Reference {
    Eigen::VectorXd mean;
    nlohmann::json provenance;
};

Reference load_reference(const std::filesystem::path& path);

/// Builds the target named by an experiment config (exoplanet, gp or custom).
TargetDensity target_from_config(const ExperimentConfig& config);

struct ReferenceOptions {
    std::int64_t evaluations = 10'000'000;
    double inflation = 4.0;
    std::uint64_t seed = 11;
    /// Pilot AMIS run that locates the posterior.
    Eigen::Index pilot_samples = 20'000;
    int pilot_iterations = 25;
    Eigen::VectorXd pilot_mean;
    Eigen::MatrixXd pilot_cov;
};

/// Dense randomized-QMC importance sampling of the posterior mean, processed in chunks.
Reference compute_reference(const TargetDensity& target, const ReferenceOptions& options);

}  // namespace iq
