// Command-line front end: evaluate fractional derivatives, run the descent
// schemes, audit recorded trajectories against the convergence-bound
// inequality chain, and emit the counterexample reports.
//
// Exit codes: 0 success; 1 malformed flags or unparseable input;
// 2 evaluation domain error; 3 run ended by a series domain error;
// 4 trajectory tail too short to audit; 5 counterexample search exhausted.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracgrad/config.hpp"
#include "fracgrad/io.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitRunDomain = 3;
constexpr int kExitInsufficientTail = 4;
constexpr int kExitNotFound = 5;

/// FRACGRAD_GAMMA_MODE overrides the default gamma mode wherever the user
/// did not pick one explicitly (flag or config key).
std::optional<fracgrad::GammaMode> env_gamma_mode() {
    const char* v = std::getenv("FRACGRAD_GAMMA_MODE");
    if (v == nullptr || *v == '\0') return std::nullopt;
    return fracgrad::parse_gamma_mode(v);
}

struct DeriveArgs {
    std::string function;
    double alpha = 0.5;
    double lower = 0.0;
    double upper = 1.0;
    std::string mode;  // empty: env override or extended
    bool quadrature = false;
    int nodes = 400;
    int max_terms = 64;
    double abs_tol = 1e-14;
};

int cmd_derive(const DeriveArgs& args) {
    fracgrad::GammaMode mode = fracgrad::GammaMode::Extended;
    if (!args.mode.empty())
        mode = fracgrad::parse_gamma_mode(args.mode);
    else if (auto env = env_gamma_mode())
        mode = *env;

    fracgrad::DifferentiableFunction f = fracgrad::parse_function(args.function);
    fracgrad::TruncationPolicy policy;
    policy.max_terms = args.max_terms;
    policy.abs_tol = args.abs_tol;

    fracgrad::SeriesResult res =
        fracgrad::caputo_series(f, args.alpha, args.lower, args.upper, policy, mode);
    std::cout << "value = " << fracgrad::format_signif17(res.value) << "\n"
              << "terms_used = " << res.terms_used << "\n"
              << "status = " << fracgrad::to_string(res.status) << "\n";
    if (args.quadrature) {
        double oracle =
            fracgrad::caputo_quadrature(f, args.alpha, args.lower, args.upper, args.nodes);
        std::cout << "quadrature = " << fracgrad::format_signif17(oracle) << "\n"
                  << "abs_diff = " << fracgrad::format_signif17(std::abs(res.value - oracle))
                  << "\n";
    }
    return 0;
}

int cmd_optimize(const std::string& config_path) {
    std::vector<std::string> seen_keys;
    fracgrad::ExperimentConfig cfg = fracgrad::load_experiment(config_path, &seen_keys);
    bool mode_explicit =
        std::find(seen_keys.begin(), seen_keys.end(), "gamma_mode") != seen_keys.end();
    if (!mode_explicit) {
        if (auto env = env_gamma_mode()) cfg.run.gamma_mode = *env;
    }

    fracgrad::Trajectory traj = fracgrad::run(cfg.function, cfg.run, cfg.algorithm);

    const std::string csv_path = cfg.output_csv.value_or("trajectory.csv");
    const std::string json_path = cfg.output_json.value_or("trajectory.json");
    fracgrad::write_file(csv_path, fracgrad::trajectory_to_csv(traj));
    fracgrad::write_file(json_path, fracgrad::trajectory_sidecar_json(cfg, traj));

    std::cout << "terminal_status = " << fracgrad::to_string(traj.terminal_status) << "\n"
              << "iterations = " << traj.steps.size() << "\n"
              << "final_iterate = " << fracgrad::format_signif17(traj.iterates.back()) << "\n"
              << "wrote " << csv_path << "\n"
              << "wrote " << json_path << "\n";
    if (!traj.terminal_detail.empty())
        std::cout << "terminal_detail = " << traj.terminal_detail << "\n";

    return traj.terminal_status == fracgrad::TerminalStatus::SeriesDomainError ? kExitRunDomain
                                                                               : 0;
}

struct AuditArgs {
    std::string trajectory_path;
    std::optional<double> x_star;
    std::optional<double> epsilon;
    std::optional<int> tail_start;
    std::optional<int> index_cap;
    std::string output_csv;
    std::string output_json;
};

/// The trajectory lives in two sibling files (.csv table, .json sidecar);
/// accept either name and find the other.
std::pair<std::string, std::string> trajectory_file_pair(const std::string& path) {
    auto swap_ext = [&](const std::string& from, const std::string& to) -> std::string {
        return path.substr(0, path.size() - from.size()) + to;
    };
    if (path.size() > 4 && path.rfind(".csv") == path.size() - 4)
        return {path, swap_ext(".csv", ".json")};
    if (path.size() > 5 && path.rfind(".json") == path.size() - 5)
        return {swap_ext(".json", ".csv"), path};
    return {path + ".csv", path + ".json"};
}

int cmd_audit(const AuditArgs& args) {
    auto [csv_path, sidecar_path] = trajectory_file_pair(args.trajectory_path);
    fracgrad::Trajectory traj = fracgrad::trajectory_from_csv(fracgrad::read_file(csv_path));
    fracgrad::SidecarData side =
        fracgrad::parse_trajectory_sidecar(fracgrad::read_file(sidecar_path));
    traj.terminal_status = side.terminal_status;
    traj.terminal_detail = side.terminal_detail;
    const fracgrad::ExperimentConfig& cfg = side.config;

    fracgrad::AuditOptions opts;
    opts.true_extremum = args.x_star ? args.x_star : cfg.x_star;
    opts.epsilon = args.epsilon ? args.epsilon : cfg.epsilon;
    opts.tail_start = args.tail_start ? args.tail_start : cfg.tail_start;
    opts.index_cap = args.index_cap.value_or(cfg.index_cap.value_or(32));

    fracgrad::AuditReport rep =
        fracgrad::audit_trajectory(cfg.function, cfg.run, cfg.algorithm, traj, opts);

    std::string out_csv = args.output_csv;
    std::string out_json = args.output_json;
    if (out_csv.empty()) out_csv = csv_path.substr(0, csv_path.size() - 4) + ".audit.csv";
    if (out_json.empty())
        out_json = sidecar_path.substr(0, sidecar_path.size() - 5) + ".audit.json";
    fracgrad::write_file(out_csv, fracgrad::audit_to_csv(rep));
    fracgrad::write_file(out_json, fracgrad::audit_to_json(rep));

    std::cout << "audited_steps = " << rep.steps.size()
              << ", paper_direction_failures = " << rep.paper_fail_count
              << ", geometric_failures = " << rep.geometric_fail_count
              << ", epsilon_failures = " << rep.epsilon_fail_count
              << ", corrected_failures = " << rep.corrected_fail_count << "\n";
    std::cout << "sigma_paper = " << fracgrad::format_signif17(rep.sigma.sigma_paper)
              << ", sigma_abs = " << fracgrad::format_signif17(rep.sigma.sigma_abs)
              << ", sign_discrepancy = " << (rep.sigma.sign_discrepancy ? "true" : "false")
              << "\n";
    std::cout << "wrote " << out_csv << "\n"
              << "wrote " << out_json << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional-order gradient descent laboratory"};
    app.require_subcommand(1);

    // ---- derive ----
    DeriveArgs derive_args;
    CLI::App* derive = app.add_subcommand(
        "derive", "Evaluate the fractional derivative series at one point");
    derive->add_option("--function", derive_args.function,
                       "descriptor, e.g. poly:0,0,1 | exp:1,1 | ratpole:-1,1 | shifted_quad:3,1")
        ->required();
    derive->add_option("--alpha", derive_args.alpha, "order in (0, 1]")->required();
    derive->add_option("--lower", derive_args.lower, "lower terminal c")->required();
    derive->add_option("--upper", derive_args.upper, "evaluation point x")->required();
    derive->add_option("--mode", derive_args.mode, "gamma mode: strict | extended");
    derive->add_flag("--quadrature", derive_args.quadrature,
                     "also evaluate the integral-form oracle and print the difference");
    derive->add_option("--nodes", derive_args.nodes, "quadrature nodes (default 400)");
    derive->add_option("--max-terms", derive_args.max_terms, "series term cap (default 64)");
    derive->add_option("--abs-tol", derive_args.abs_tol,
                       "series truncation tolerance (default 1e-14)");

    // ---- optimize ----
    std::string config_path;
    CLI::App* optimize =
        app.add_subcommand("optimize", "Run a descent scheme described by a config file");
    optimize->add_option("config", config_path, "experiment config path")->required();

    // ---- audit ----
    AuditArgs audit_args;
    double audit_x_star = 0.0, audit_epsilon = 0.0;
    int audit_tail_start = 0, audit_index_cap = 0;
    CLI::App* audit = app.add_subcommand(
        "audit", "Recompute the convergence-bound inequality chain along a recorded trajectory");
    audit->add_option("trajectory", audit_args.trajectory_path,
                      "trajectory file (.csv or .json of the pair)")
        ->required();
    CLI::Option* o_xstar =
        audit->add_option("--x-star", audit_x_star, "true extremum of the objective");
    CLI::Option* o_eps = audit->add_option("--epsilon", audit_epsilon,
                                           "tail radius (default |x_star - claimed limit| / 2)");
    CLI::Option* o_tail =
        audit->add_option("--tail-start", audit_tail_start, "first tail index N (default: found)");
    CLI::Option* o_cap =
        audit->add_option("--index-cap", audit_index_cap, "coefficient index cap (default 32)");
    audit->add_option("--output-csv", audit_args.output_csv, "per-step audit table path");
    audit->add_option("--output-json", audit_args.output_json, "audit report path");

    // ---- counterexample ----
    CLI::App* cex = app.add_subcommand(
        "counterexample", "Generate one of the bound-breaking witness reports");
    cex->require_subcommand(1);

    fracgrad::SigmaSignConfig sigma_cfg;
    std::string sigma_range;
    CLI::App* cex_sigma = cex->add_subcommand(
        "sigma-sign", "coefficient sign/growth table for -1/(1-x): sup-based bounds pick "
                      "the wrong sign and keep growing");
    cex_sigma->add_option("--alpha", sigma_cfg.alpha, "order in (0, 1]");
    cex_sigma->add_option("--range", sigma_range, "sample range lo:hi inside (0, 1)");
    cex_sigma->add_option("--samples", sigma_cfg.n_samples, "sample count (default 19)");
    cex_sigma->add_option("--index-cap", sigma_cfg.index_cap, "highest index (default 32)");

    fracgrad::GeometricSearchConfig geo_cfg;
    std::string geo_function = "poly:0,0,1";
    CLI::App* cex_geo = cex->add_subcommand(
        "geometric", "search for a run whose lag gap reaches 1, breaking the geometric sum");
    cex_geo->add_option("--function", geo_function, "objective descriptor");
    cex_geo->add_option("--alpha", geo_cfg.alpha, "order in (0, 1)");
    cex_geo->add_option("--mus", geo_cfg.mus, "step gains to try")->delimiter(',');
    cex_geo->add_option("--x0s", geo_cfg.x0s, "starting points to try")->delimiter(',');
    cex_geo->add_option("--lags", geo_cfg.lags, "terminal lags to try")->delimiter(',');
    cex_geo->add_option("--max-iters", geo_cfg.max_iters, "steps per probe run (default 25)");

    double gamma_alpha = 0.5;
    CLI::App* cex_gamma = cex->add_subcommand(
        "gamma-domain", "indices whose series coefficient needs Gamma at a non-positive argument");
    cex_gamma->add_option("--alpha", gamma_alpha, "order in (0, 1]")->required();

    std::string cex_output;
    cex->add_option("--output", cex_output, "also write the JSON record to this path");
    // lets --output appear after the kind subcommand on the command line
    cex_sigma->fallthrough();
    cex_geo->fallthrough();
    cex_gamma->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (derive->parsed()) return cmd_derive(derive_args);
        if (optimize->parsed()) return cmd_optimize(config_path);
        if (audit->parsed()) {
            if (o_xstar->count() > 0) audit_args.x_star = audit_x_star;
            if (o_eps->count() > 0) audit_args.epsilon = audit_epsilon;
            if (o_tail->count() > 0) audit_args.tail_start = audit_tail_start;
            if (o_cap->count() > 0) audit_args.index_cap = audit_index_cap;
            return cmd_audit(audit_args);
        }
        if (cex->parsed()) {
            std::string record;
            int code = 0;
            if (cex_sigma->parsed()) {
                if (!sigma_range.empty()) {
                    auto colon = sigma_range.find(':');
                    if (colon == std::string::npos)
                        throw std::invalid_argument("--range expects lo:hi");
                    sigma_cfg.x_lo = std::stod(sigma_range.substr(0, colon));
                    sigma_cfg.x_hi = std::stod(sigma_range.substr(colon + 1));
                }
                record = fracgrad::sigma_sign_to_json(fracgrad::counterexample_sigma_sign(sigma_cfg));
            } else if (cex_geo->parsed()) {
                geo_cfg.f = fracgrad::parse_function(geo_function);
                fracgrad::GeometricWitness wit = fracgrad::counterexample_geometric(geo_cfg);
                record = fracgrad::geometric_to_json(wit, geo_cfg.f);
                if (!wit.found) code = kExitNotFound;
            } else {
                record = fracgrad::gamma_domain_to_json(
                    fracgrad::counterexample_gamma_domain(gamma_alpha));
            }
            std::cout << record;
            if (!cex_output.empty()) fracgrad::write_file(cex_output, record);
            return code;
        }
    } catch (const fracgrad::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const fracgrad::OverflowError& e) {
        std::cerr << "overflow: " << e.what() << "\n";
        return kExitDomain;
    } catch (const fracgrad::InsufficientTailError& e) {
        std::cerr << "insufficient tail: " << e.what() << "\n";
        return kExitInsufficientTail;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
