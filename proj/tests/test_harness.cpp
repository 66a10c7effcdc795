#include "iq/error.hpp"
#include "iq/experiments.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace iq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = IQ_SOURCE_DIR;
const std::string kCli = IQ_CLI_PATH;

std::string render(const Report& r, const std::string& stamp) {
    std::ostringstream out;
    write_report(r, out, stamp);
    return out.str();
}

std::string without_timestamp(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind("# generated:", 0) != 0) out += line + "\n";
    return out;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const fs::path out = fs::temp_directory_path() / "iq_cli_test_out.txt";
    const std::string cmd = kCli + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(out);
        *output = std::string(std::istreambuf_iterator<char>(in), {});
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error(const json& j) {
    try {
        run_experiment(parse_config(j, kSource / "configs"));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("config validation names the field and the allowed values") {
    const std::string e1 = config_error({{"experiment", "toy3"}, {"method", "igh"}});
    CHECK(e1.find("experiment") != std::string::npos);
    CHECK(e1.find("toy1") != std::string::npos);
    const std::string e2 = config_error({{"experiment", "toy1"}, {"method", "igh2"}});
    CHECK(e2.find("method") != std::string::npos);
    CHECK(e2.find("m_pmc") != std::string::npos);
    const std::string e3 = config_error({{"experiment", "toy1"}, {"method", "igh"}, {"alpha", "five"}});
    CHECK(e3.find("alpha") != std::string::npos);
    const std::string e4 = config_error({{"experiment", "toy1"}, {"method", "amis"}});
    CHECK(!e4.empty());
    const std::string e5 = config_error({{"experiment", "toy2"}, {"method", "igh"}, {"sigmas", {1.0, -2.0}}});
    CHECK(e5.find("sigmas") != std::string::npos);
    CHECK_THROWS_AS(load_config(kSource / "configs" / "missing.json"), ConfigError);
}

TEST_CASE("toy1 rows") {
    const Report r = run_experiment(load_config(kSource / "configs" / "toy1.json"));
    for (int p : {2, 4, 6, 8, 10}) {
        const ResultRow* row = find_row(r.rows, "igh", "p=" + std::to_string(p), "unnormalized", 1);
        REQUIRE(row);
        REQUIRE(row->rel_err);
        if (p <= 4) CHECK(*row->rel_err < 1e-10);
        else CHECK(*row->rel_err > 1e-4);
    }
}

TEST_CASE("same config and seed give a byte-identical CSV") {
    ExperimentConfig cfg = load_config(kSource / "configs" / "toy2.json");
    cfg.params["seeds"] = 6;
    cfg.params["threads"] = 1;
    const std::string a = render(run_experiment(cfg), "2026-01-01T00:00:00Z");
    cfg.params["threads"] = 3;
    const std::string b = render(run_experiment(cfg), "2026-06-01T12:00:00Z");
    CHECK(a != b);
    CHECK(without_timestamp(a) == without_timestamp(b));

    ExperimentConfig mm = load_config(kSource / "configs" / "multimodal.json");
    mm.params["seeds"] = 2;
    mm.params["T"] = 3;
    mm.params["M"] = 4;
    mm.params["report_iterations"] = json::array({3});
    const std::string c = render(run_experiment(mm), "x");
    CHECK(c == render(run_experiment(mm), "x"));
}

TEST_CASE("evaluation-count columns follow the analytic budgets") {
    ExperimentConfig cfg = load_config(kSource / "configs" / "gp.json");
    cfg.params["seeds"] = 1;
    cfg.params["alpha"] = 2;
    cfg.params["T"] = 3;
    const Report r = run_experiment(cfg);
    const std::int64_t n = 8, t = 3;
    const ResultRow* last = find_row(r.rows, "am_igh", "alpha=2", "cumulative", 3);
    const ResultRow* dm = find_row(r.rows, "am_igh_dm", "alpha=2", "cumulative", 3);
    const ResultRow* am = find_row(r.rows, "amis", "alpha=2", "cumulative", 3);
    REQUIRE(last);
    REQUIRE(dm);
    REQUIRE(am);
    CHECK(last->counts.target_evals == n * t);
    CHECK(last->counts.proposal_evals == n * t);
    CHECK(dm->counts.denominator_evals == n * t * (t + 1) / 2);
    CHECK(dm->counts.proposal_evals == n * t * t);
    CHECK(am->counts.denominator_evals == n * t * (t + 1) / 2);

    ExperimentConfig mm = load_config(kSource / "configs" / "multimodal.json");
    mm.params["seeds"] = 1;
    mm.params["T"] = 2;
    mm.params["M"] = 3;
    mm.params["alpha"] = 2;
    mm.params["N"] = 4;
    mm.params["report_iterations"] = json::array({2});
    mm.params["sigma1"] = json::array({5});
    const Report rm = run_experiment(mm);
    const ResultRow* mp = find_row(rm.rows, "m_pigh", "sigma1=5", "self_normalized", 2);
    REQUIRE(mp);
    CHECK(mp->counts.target_evals == 3 * 4 * 2);
    CHECK(mp->counts.proposal_evals == 3 * 3 * 4 * 2);
}

TEST_CASE("missing oracle omits the error columns with a warning") {
    ExperimentConfig cfg = load_config(kSource / "configs" / "gp.json");
    cfg.params.erase("reference");
    cfg.params["seeds"] = 1;
    cfg.params["alpha"] = 2;
    cfg.params["T"] = 2;
    const Report r = run_experiment(cfg);
    REQUIRE(!r.warnings.empty());
    const std::string text = render(r, "");
    const auto start = text.find("\nmethod,");
    REQUIRE(start != std::string::npos);
    const std::string header = text.substr(start + 1, text.find('\n', start + 1) - start - 1);
    CHECK(header.find("sqerr") == std::string::npos);
    CHECK(header.find("ess_igh") != std::string::npos);
    CHECK(text.find("# warning: no oracle available") != std::string::npos);
}

TEST_CASE("CSV round trip") {
    const fs::path p = fs::temp_directory_path() / "iq_roundtrip.csv";
    Eigen::MatrixXd m(2, 3);
    m << 1.0, 0.1, -3.25e-17, 2.0, 1.0 / 3.0, 1e300;
    write_csv(p, {"a", "b", "c"}, m);
    const CsvTable t = read_csv(p);
    CHECK(t.columns == std::vector<std::string>{"a", "b", "c"});
    CHECK(t.values == m);
    CHECK(t.column("b") == 1);
    const GpData gp = load_gp_data(kSource / "data" / "gp.csv");
    CHECK(gp.inputs.rows() == 50);
    CHECK(gp.inputs.cols() == 2);
    const ExoplanetData ex = load_exoplanet_data(kSource / "data" / "exoplanet.csv");
    CHECK(ex.times.size() == 40);
    const Reference ref = load_reference(kSource / "data" / "exoplanet_reference.json");
    CHECK(ref.mean.size() == 5);
    CHECK(ref.provenance.contains("evaluations"));
}

TEST_CASE("cli subcommands and exit codes") {
    std::string out;
    CHECK(run_cli("nodes --rule hermite --alpha 3 --dim 1", &out) == 0);
    CHECK(out.rfind("x_1,v\n", 0) == 0);
    CHECK(out.find("0.66666666666666") != std::string::npos);

    CHECK(run_cli("estimate --target nakagami --r 4 --method igh --alpha 5 --mean 0 --cov 1 --f moment:2", &out) == 0);
    CHECK(out.find("igh") != std::string::npos);

    const std::string cfg = (kSource / "configs" / "toy1.json").string();
    CHECK(run_cli("experiment toy1 --config " + cfg + " --no-timestamp", &out) == 0);
    CHECK(out.find("# iq experiment report") == 0);
    CHECK(out.find("# generated: -\n") != std::string::npos);
    std::string again;
    run_cli("experiment toy1 --config " + cfg + " --no-timestamp", &again);
    CHECK(out == again);

    CHECK(run_cli("experiment toy2 --config " + cfg, &out) == 2);
    CHECK(out.find("toy1") != std::string::npos);
    CHECK(run_cli("sweep --config " + cfg + " --param r --grid 2,4 --no-timestamp", &out) == 0);
    CHECK(out.find("r=2") != std::string::npos);
    CHECK(out.find("r=4") != std::string::npos);
    CHECK(run_cli("nodes --rule kronrod --alpha 3", &out) == 2);
    CHECK(run_cli("nodes --rule hermite --alpha 0", &out) == 2);

    const std::string data = (kSource / "data" / "exoplanet.csv").string();
    CHECK(run_cli("estimate --target exoplanet --data " + data +
                      " --method igh --alpha 2 --mean 100,100,100,100,100 --cov '1,0,0,0,0;0,1,0,0,0;0,0,1,0,0;0,0,0,1,0;0,0,0,0,1'",
                  &out) == 3);
}
