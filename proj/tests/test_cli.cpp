#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "fracgrad/io.hpp"

using fracgrad::read_file;
using fracgrad::write_file;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Spawn the installed binary through the shell, capturing both streams.
/// `env_prefix` is prepended verbatim (e.g. "FRACGRAD_GAMMA_MODE=strict").
CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    const std::string tag = std::to_string(counter++);
    const std::string out_path = "cli_stdout_" + tag + ".txt";
    const std::string err_path = "cli_stderr_" + tag + ".txt";
    std::string cmd = env_prefix.empty() ? std::string{} : env_prefix + " ";
    cmd += std::string(FRACGRAD_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    int rc = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    res.out = read_file(out_path);
    res.err = read_file(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return res;
}

/// Value of a `key = value` console line, or empty.
std::string console_value(const std::string& out, const std::string& key) {
    const std::string needle = key + " = ";
    auto pos = out.find(needle);
    if (pos == std::string::npos) return {};
    pos += needle.size();
    auto end = out.find('\n', pos);
    return out.substr(pos, end - pos);
}

bool file_exists(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f != nullptr) std::fclose(f);
    return f != nullptr;
}

}  // namespace

TEST_CASE("derive prints the series value with status", "[cli]") {
    auto res = run_cli("derive --function \"poly:0,1\" --alpha 0.5 --lower 0 --upper 1");
    REQUIRE(res.exit_code == 0);
    // printed at full precision: parses back to 2/sqrt(pi) to within rounding
    std::string value = console_value(res.out, "value");
    REQUIRE(value.size() >= 17);
    REQUIRE(std::stod(value) == Catch::Approx(1.1283791670955126).epsilon(1e-14));
    REQUIRE(console_value(res.out, "terms_used") == "1");
    REQUIRE(console_value(res.out, "status") == "exact_finite");

    auto flat = run_cli("derive --function const:5 --alpha 0.3 --lower 0 --upper 2");
    REQUIRE(flat.exit_code == 0);
    REQUIRE(console_value(flat.out, "value") == "0");
}

TEST_CASE("derive cross-checks against the quadrature oracle on request", "[cli]") {
    auto res = run_cli(
        "derive --function \"poly:0,0,1\" --alpha 0.5 --lower 0 --upper 1 --quadrature");
    REQUIRE(res.exit_code == 0);
    REQUIRE(std::stod(console_value(res.out, "value")) ==
            Catch::Approx(1.5045055561273501).epsilon(1e-13));
    REQUIRE(!console_value(res.out, "quadrature").empty());
    REQUIRE(std::stod(console_value(res.out, "abs_diff")) < 1e-6);
}

TEST_CASE("strict gamma mode fails derive with the offending argument named", "[cli]") {
    auto res = run_cli(
        "derive --function \"poly:0,0,1\" --alpha 0.5 --lower 0 --upper 1 --mode strict");
    REQUIRE(res.exit_code == 2);
    REQUIRE(res.err.find("Gamma(-0.5)") != std::string::npos);
}

TEST_CASE("gamma mode environment override applies only without an explicit flag", "[cli]") {
    const std::string args = "derive --function \"poly:0,0,1\" --alpha 0.5 --lower 0 --upper 1";
    auto enforced = run_cli(args, "FRACGRAD_GAMMA_MODE=strict");
    REQUIRE(enforced.exit_code == 2);
    auto overridden = run_cli(args + " --mode extended", "FRACGRAD_GAMMA_MODE=strict");
    REQUIRE(overridden.exit_code == 0);
    auto junk = run_cli(args, "FRACGRAD_GAMMA_MODE=weird");
    REQUIRE(junk.exit_code == 1);
}

TEST_CASE("malformed invocations exit with usage errors", "[cli]") {
    REQUIRE(run_cli("").exit_code == 1);
    REQUIRE(run_cli("bogus").exit_code == 1);
    REQUIRE(run_cli("derive --alpha 0.5").exit_code == 1);
    REQUIRE(run_cli("derive --function poly:0,1 --alpha 0.5 --lower 0 --upper 1 --what").exit_code ==
            1);
    REQUIRE(run_cli("counterexample gamma-domain").exit_code == 1);  // --alpha required
    REQUIRE(run_cli("--help").exit_code == 0);
    REQUIRE(run_cli("audit no_such_trajectory.csv").exit_code == 1);
}

TEST_CASE("optimize runs a config and writes the trajectory pair deterministically",
          "[cli]") {
    const std::string cfg_path = "cli_run.cfg";
    write_file(cfg_path,
               "algorithm = algo1\n"
               "function = \"poly:0,0,1\"\n"
               "alpha = 0.5\n"
               "mu = 0.1\n"
               "lag = 1\n"
               "x0 = 1\n"
               "warmup = gd_bootstrap\n"
               "step_tol = 0\n"
               "max_iters = 25\n"
               "output_csv = \"cli_run.csv\"\n"
               "output_json = \"cli_run.json\"\n");

    auto res = run_cli("optimize " + cfg_path);
    REQUIRE(res.exit_code == 0);
    REQUIRE(console_value(res.out, "terminal_status") == "max_iters");
    REQUIRE(console_value(res.out, "iterations") == "25");
    REQUIRE(res.out.find("wrote cli_run.csv") != std::string::npos);
    std::string csv_first = read_file("cli_run.csv");
    std::string json_first = read_file("cli_run.json");
    std::remove("cli_run.csv");
    std::remove("cli_run.json");

    auto again = run_cli("optimize " + cfg_path);
    REQUIRE(again.exit_code == 0);
    REQUIRE(read_file("cli_run.csv") == csv_first);
    REQUIRE(read_file("cli_run.json") == json_first);

    auto side = fracgrad::parse_trajectory_sidecar(json_first);
    REQUIRE(side.config.algorithm == fracgrad::Algorithm::Algo1);
    REQUIRE(side.terminal_status == fracgrad::TerminalStatus::MaxIters);
    auto traj = fracgrad::trajectory_from_csv(csv_first);
    REQUIRE(traj.iterates.size() == 26);

    std::remove(cfg_path.c_str());
    std::remove("cli_run.csv");
    std::remove("cli_run.json");
}

TEST_CASE("optimize reports a series domain error with exit code 3", "[cli]") {
    const std::string cfg_path = "cli_strict.cfg";
    write_file(cfg_path,
               "algorithm = algo3\n"
               "function = \"poly:0,0,1\"\n"
               "alpha = 0.5\n"
               "x0 = 1\n"
               "gamma_mode = strict\n"
               "output_csv = \"cli_strict.csv\"\n"
               "output_json = \"cli_strict.json\"\n");
    auto res = run_cli("optimize " + cfg_path);
    REQUIRE(res.exit_code == 3);
    REQUIRE(console_value(res.out, "terminal_status") == "series_domain_error");
    REQUIRE(res.out.find("Gamma(-0.5)") != std::string::npos);
    REQUIRE(file_exists("cli_strict.csv"));  // partial run is still recorded
    // the config pinned its own gamma mode, so the env cannot flip it
    auto pinned = run_cli("optimize " + cfg_path, "FRACGRAD_GAMMA_MODE=extended");
    REQUIRE(pinned.exit_code == 3);
    std::remove(cfg_path.c_str());
    std::remove("cli_strict.csv");
    std::remove("cli_strict.json");
}

TEST_CASE("audit recomputes the chain from the recorded pair", "[cli]") {
    const std::string cfg_path = "cli_audit.cfg";
    write_file(cfg_path,
               "algorithm = algo1\n"
               "function = \"poly:0,0,1\"\n"
               "alpha = 0.5\n"
               "mu = 0.1\n"
               "lag = 1\n"
               "x0 = 1\n"
               "warmup = gd_bootstrap\n"
               "step_tol = 0\n"
               "max_iters = 40\n"
               "x_star = 0\n"
               "output_csv = \"cli_audit.csv\"\n"
               "output_json = \"cli_audit.json\"\n");
    REQUIRE(run_cli("optimize " + cfg_path).exit_code == 0);

    auto res = run_cli("audit cli_audit.csv");
    INFO(res.out << res.err);
    REQUIRE(res.exit_code == 0);
    int audited = 0, paper = 0, geometric = 0, epsilon = 0, corrected = 0;
    REQUIRE(std::sscanf(res.out.c_str(),
                        "audited_steps = %d, paper_direction_failures = %d, "
                        "geometric_failures = %d, epsilon_failures = %d, "
                        "corrected_failures = %d",
                        &audited, &paper, &geometric, &epsilon, &corrected) == 5);
    REQUIRE(audited > 0);
    REQUIRE(paper == audited);  // the published direction fails on its own example class
    REQUIRE(corrected == 0);
    REQUIRE(geometric == 0);
    REQUIRE(file_exists("cli_audit.audit.csv"));
    REQUIRE(file_exists("cli_audit.audit.json"));
    auto parsed = nlohmann::json::parse(read_file("cli_audit.audit.json"));
    REQUIRE(parsed.at("audited_steps").get<int>() == audited);
    REQUIRE(parsed.at("paper_fail_count").get<int>() == paper);

    // stem form resolves both files; flags override the recorded audit inputs
    auto stem = run_cli("audit cli_audit --epsilon 0.2 --index-cap 8 "
                        "--output-csv cli_audit2.csv --output-json cli_audit2.json");
    REQUIRE(stem.exit_code == 0);
    auto parsed2 = nlohmann::json::parse(read_file("cli_audit2.json"));
    REQUIRE(parsed2.at("epsilon").get<double>() == 0.2);
    REQUIRE(parsed2.at("index_cap").get<int>() == 8);

    for (const char* p : {"cli_audit.cfg", "cli_audit.csv", "cli_audit.json",
                          "cli_audit.audit.csv", "cli_audit.audit.json", "cli_audit2.csv",
                          "cli_audit2.json"})
        std::remove(p);
}

TEST_CASE("audit refuses a trajectory with no usable tail", "[cli]") {
    const std::string cfg_path = "cli_tiny.cfg";
    write_file(cfg_path,
               "algorithm = algo1\n"
               "function = \"poly:0,0,1\"\n"
               "alpha = 0.5\n"
               "x0 = 1\n"
               "warmup = gd_bootstrap\n"
               "max_iters = 1\n"
               "x_star = 0\n"
               "output_csv = \"cli_tiny.csv\"\n"
               "output_json = \"cli_tiny.json\"\n");
    REQUIRE(run_cli("optimize " + cfg_path).exit_code == 0);
    auto res = run_cli("audit cli_tiny.csv");
    REQUIRE(res.exit_code == 4);
    REQUIRE(res.err.find("insufficient tail") != std::string::npos);
    for (const char* p : {"cli_tiny.cfg", "cli_tiny.csv", "cli_tiny.json"}) std::remove(p);
}

TEST_CASE("counterexample subcommands emit machine-readable records", "[cli]") {
    auto sigma = run_cli("counterexample sigma-sign --alpha 0.5 --range 0.1:0.9 --samples 9");
    REQUIRE(sigma.exit_code == 0);
    auto sigma_json = nlohmann::json::parse(sigma.out);
    REQUIRE(sigma_json.at("alternating").get<bool>());
    REQUIRE(sigma_json.at("growing").get<bool>());
    REQUIRE(sigma_json.at("sigma").at("sign_discrepancy").get<bool>());

    auto geo = run_cli("counterexample geometric --output cli_geo.json");
    REQUIRE(geo.exit_code == 0);
    auto geo_json = nlohmann::json::parse(geo.out);
    REQUIRE(geo_json.at("found").get<bool>());
    REQUIRE(geo_json.at("delta").get<double>() >= 1.0);
    REQUIRE(read_file("cli_geo.json") == geo.out);
    std::remove("cli_geo.json");

    // a function whose update never moves leaves the grid empty-handed
    auto immobile = run_cli("counterexample geometric --function const:5");
    REQUIRE(immobile.exit_code == 5);
    REQUIRE_FALSE(nlohmann::json::parse(immobile.out).at("found").get<bool>());

    auto gamma = run_cli("counterexample gamma-domain --alpha 0.5");
    REQUIRE(gamma.exit_code == 0);
    auto gamma_json = nlohmann::json::parse(gamma.out);
    REQUIRE(gamma_json.at("rows").size() == 5);
    REQUIRE(gamma_json.at("rows")[0].at("gamma_argument").get<double>() == -0.5);
    REQUIRE(gamma_json.at("rows")[0].at("strict_fails").get<bool>());
}
