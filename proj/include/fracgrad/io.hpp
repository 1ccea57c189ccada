#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracgrad/audit.hpp"
#include "fracgrad/config.hpp"
#include "fracgrad/format.hpp"

namespace fracgrad {

inline SeriesStatus parse_series_status(const std::string& s) {
    if (s == "converged_by_tolerance") return SeriesStatus::ConvergedByTolerance;
    if (s == "exact_finite") return SeriesStatus::ExactFinite;
    if (s == "truncated_at_max") return SeriesStatus::TruncatedAtMax;
    if (s == "divergence_suspected") return SeriesStatus::DivergenceSuspected;
    throw std::invalid_argument("unknown series status '" + s + "'");
}

inline TerminalStatus parse_terminal_status(const std::string& s) {
    if (s == "stopped_by_tolerance") return TerminalStatus::StoppedByTolerance;
    if (s == "max_iters") return TerminalStatus::MaxIters;
    if (s == "series_domain_error") return TerminalStatus::SeriesDomainError;
    if (s == "diverged") return TerminalStatus::Diverged;
    if (s == "series_divergence") return TerminalStatus::SeriesDivergence;
    throw std::invalid_argument("unknown terminal status '" + s + "'");
}

// ---------------------------------------------------------------------------
// Trajectory files: CSV table plus a JSON sidecar carrying what the table
// cannot (config echo, terminal status).
// ---------------------------------------------------------------------------

inline const char* kTrajectoryCsvHeader = "k,x_k,D_k,terms_used,series_status,lag_gap";

/// Rows k = 0..T; the step columns describe the step leaving x_k, so the
/// final row has them empty.  LF line endings, '.' decimal separator.
inline std::string trajectory_to_csv(const Trajectory& traj) {
    std::string out = kTrajectoryCsvHeader;
    out += '\n';
    for (std::size_t k = 0; k < traj.iterates.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += format_signif17(traj.iterates[k]);
        if (k < traj.steps.size()) {
            const StepRecord& s = traj.steps[k];
            out += ',';
            out += format_signif17(s.deriv);
            out += ',';
            out += std::to_string(s.terms_used);
            out += ',';
            out += to_string(s.series_status);
            out += ',';
            out += format_signif17(s.lag_gap);
        } else {
            out += ",,,,";
        }
        out += '\n';
    }
    return out;
}

/// Inverse of trajectory_to_csv for the table part.  terminal_status is
/// not in the table; callers complete it from the sidecar.
inline Trajectory trajectory_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("trajectory CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTrajectoryCsvHeader)
        throw std::invalid_argument("trajectory CSV: unexpected header '" + line + "'");

    Trajectory traj;
    int expected_k = 0;
    bool saw_empty_step = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != 6)
            throw std::invalid_argument("trajectory CSV: row with " +
                                        std::to_string(cells.size()) + " cells");
        if (std::stoi(cells[0]) != expected_k)
            throw std::invalid_argument("trajectory CSV: rows out of order at k=" + cells[0]);
        ++expected_k;
        traj.iterates.push_back(std::stod(cells[1]));
        if (!cells[2].empty()) {
            if (saw_empty_step)
                throw std::invalid_argument(
                    "trajectory CSV: only the final row may leave the step columns empty");
            StepRecord s;
            s.deriv = std::stod(cells[2]);
            s.terms_used = std::stoi(cells[3]);
            s.series_status = parse_series_status(cells[4]);
            s.lag_gap = std::stod(cells[5]);
            traj.steps.push_back(s);
        } else {
            saw_empty_step = true;
        }
    }
    if (traj.iterates.empty()) throw std::invalid_argument("trajectory CSV: no rows");
    if (traj.steps.size() + 1 != traj.iterates.size())
        throw std::invalid_argument(
            "trajectory CSV: only the final row may leave the step columns empty");
    return traj;
}

namespace detail {

inline bool is_integer_config_key(const std::string& key) {
    return key == "lag" || key == "max_terms" || key == "divergence_window" ||
           key == "max_iters" || key == "tail_start" || key == "index_cap";
}

inline bool is_string_config_key(const std::string& key) {
    return key == "algorithm" || key == "function" || key == "schedule" || key == "alpha_eval" ||
           key == "warmup" || key == "terminal_policy" || key == "gamma_mode" ||
           key == "output_csv" || key == "output_json";
}

/// Echo the canonical flat serialization as a JSON object, line by line,
/// so the sidecar and the config file can never disagree on keys.
inline void write_config_echo(JsonWriter& w, const ExperimentConfig& cfg) {
    w.begin_object();
    std::istringstream lines(serialize_experiment(cfg));
    std::string line;
    while (std::getline(lines, line)) {
        auto eq = line.find(" = ");
        std::string key = line.substr(0, eq);
        std::string value = unquote(line.substr(eq + 3));
        w.key(key);
        if (is_string_config_key(key))
            w.value(value);
        else if (is_integer_config_key(key))
            w.value(static_cast<long>(std::stol(value)));
        else
            w.raw_number(value);
    }
    w.end_object();
}

}  // namespace detail

struct SidecarData {
    ExperimentConfig config;
    TerminalStatus terminal_status = TerminalStatus::MaxIters;
    std::string terminal_detail;
};

inline std::string trajectory_sidecar_json(const ExperimentConfig& cfg, const Trajectory& traj) {
    JsonWriter w;
    w.begin_object();
    w.key("config");
    detail::write_config_echo(w, cfg);
    w.kv("terminal_status", to_string(traj.terminal_status));
    w.kv("terminal_detail", traj.terminal_detail);
    w.kv("iterations", traj.steps.size());
    w.kv("final_iterate", traj.iterates.empty() ? 0.0 : traj.iterates.back());
    // The schemes are stated for order < 1; running at exactly 1 is a
    // baseline convention, flagged so downstream readers cannot miss it.
    bool unity =
        cfg.run.schedule.is_constant() && cfg.run.schedule.constant_value() == 1.0;
    w.kv("alpha_unity_baseline", unity);
    w.end_object();
    return w.str() + "\n";
}

/// Read the sidecar back.  The config echo is replayed through the flat
/// config parser, so both representations stay lossless by construction.
inline SidecarData parse_trajectory_sidecar(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::string flat;
    for (const auto& [key, value] : j.at("config").items()) {
        flat += key;
        flat += " = ";
        if (value.is_string())
            // re-quote: the flat parser strips comments outside quotes only,
            // so a bare '#' in a path would otherwise truncate the value
            flat += '"' + value.get<std::string>() + '"';
        else if (value.is_null())
            throw std::invalid_argument("sidecar: config value for '" + key + "' is null");
        else
            flat += value.dump();
        flat += '\n';
    }
    SidecarData data;
    data.config = parse_experiment(flat);
    data.terminal_status = parse_terminal_status(j.at("terminal_status").get<std::string>());
    data.terminal_detail = j.value("terminal_detail", std::string{});
    return data;
}

// ---------------------------------------------------------------------------
// Audit report emission
// ---------------------------------------------------------------------------

inline const char* kAuditCsvHeader =
    "k,x_k,delta,lhs_12a,series_12c,triangle_12d,bound_12d_paper,bound_12d_corrected,"
    "geom_sum_12e,bound_12f_paper,geometric_ok,epsilon_ok,paper_direction_holds,"
    "corrected_direction_holds,tail_ok";

inline std::string audit_to_csv(const AuditReport& rep) {
    std::string out = kAuditCsvHeader;
    out += '\n';
    auto flag = [](bool b) { return b ? "true" : "false"; };
    for (const StepAudit& s : rep.steps) {
        out += std::to_string(s.k);
        out += ',';
        out += format_signif17(s.x_value);
        out += ',';
        out += format_signif17(s.delta);
        out += ',';
        out += format_signif17(s.lhs_12a);
        out += ',';
        out += format_signif17(s.series_12c);
        out += ',';
        out += format_signif17(s.triangle_12d);
        out += ',';
        out += format_signif17(s.bound_12d_paper);
        out += ',';
        out += format_signif17(s.bound_12d_corrected);
        out += ',';
        out += format_signif17(s.geom_sum_12e);
        out += ',';
        out += format_signif17(s.bound_12f_paper);
        out += ',';
        out += flag(s.geometric_ok);
        out += ',';
        out += flag(s.epsilon_ok);
        out += ',';
        out += flag(s.paper_direction_holds);
        out += ',';
        out += flag(s.corrected_direction_holds);
        out += ',';
        out += flag(s.tail_ok);
        out += '\n';
    }
    return out;
}

namespace detail {

inline void write_sigma(JsonWriter& w, const SigmaReport& s) {
    w.begin_object();
    w.kv("sigma_paper", s.sigma_paper);
    w.kv("sigma_abs", s.sigma_abs);
    w.kv("sign_discrepancy", s.sign_discrepancy);
    w.kv("d_paper", s.d_paper);
    w.kv("d_abs", s.d_abs);
    w.end_object();
}

}  // namespace detail

inline std::string audit_to_json(const AuditReport& rep) {
    JsonWriter w;
    w.begin_object();
    w.kv("alpha", rep.alpha);
    w.kv("mu", rep.mu);
    w.kv("claimed_limit", rep.claimed_limit);
    w.kv("epsilon", rep.epsilon);
    w.kv("tail_start", rep.tail_start);
    w.kv("first_audited", rep.first_audited);
    w.kv("index_cap", rep.index_cap);
    w.kv("slack", rep.slack);
    w.key("sigma");
    detail::write_sigma(w, rep.sigma);
    w.kv("audited_steps", rep.steps.size());
    w.kv("paper_fail_count", rep.paper_fail_count);
    w.kv("corrected_fail_count", rep.corrected_fail_count);
    w.kv("geometric_fail_count", rep.geometric_fail_count);
    w.kv("epsilon_fail_count", rep.epsilon_fail_count);
    w.key("steps");
    w.begin_array();
    for (const StepAudit& s : rep.steps) {
        w.begin_object();
        w.kv("k", s.k);
        w.kv("x_k", s.x_value);
        w.kv("delta", s.delta);
        w.kv("lhs_12a", s.lhs_12a);
        w.kv("series_12c", s.series_12c);
        w.kv("triangle_12d", s.triangle_12d);
        w.kv("bound_12d_paper", s.bound_12d_paper);
        w.kv("bound_12d_corrected", s.bound_12d_corrected);
        w.kv("geom_sum_12e", s.geom_sum_12e);
        w.kv("bound_12f_paper", s.bound_12f_paper);
        w.kv("geometric_ok", s.geometric_ok);
        w.kv("epsilon_ok", s.epsilon_ok);
        w.kv("paper_direction_holds", s.paper_direction_holds);
        w.kv("corrected_direction_holds", s.corrected_direction_holds);
        w.kv("tail_ok", s.tail_ok);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    return w.str() + "\n";
}

// ---------------------------------------------------------------------------
// Counterexample reports, one machine-readable record each
// ---------------------------------------------------------------------------

inline std::string sigma_sign_to_json(const SigmaSignReport& rep) {
    JsonWriter w;
    w.begin_object();
    w.kv("function", "ratpole:-1,1");
    w.kv("alpha", rep.config.alpha);
    w.kv("x_lo", rep.config.x_lo);
    w.kv("x_hi", rep.config.x_hi);
    w.kv("n_samples", rep.config.n_samples);
    w.kv("index_cap", rep.config.index_cap);
    w.key("sigma");
    detail::write_sigma(w, rep.sigma);
    w.kv("alternating", rep.alternating);
    w.kv("growing", rep.growing);
    w.key("index_summary");
    w.begin_array();
    for (const IndexCoefficientSummary& s : rep.index_summary) {
        w.begin_object();
        w.kv("i", s.i);
        w.kv("min_coeff", s.min_coeff);
        w.kv("max_coeff", s.max_coeff);
        w.kv("max_abs", s.max_abs);
        w.kv("sign", s.sign);
        w.kv("sign_consistent", s.sign_consistent);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    return w.str() + "\n";
}

inline std::string geometric_to_json(const GeometricWitness& wit,
                                     const DifferentiableFunction& f) {
    JsonWriter w;
    w.begin_object();
    w.kv("found", wit.found);
    w.kv("function", format_function(f));
    if (wit.found) {
        w.kv("mu", wit.mu);
        w.kv("x0", wit.x0);
        w.kv("lag", wit.lag);
        w.kv("k", wit.k);
        w.kv("delta", wit.delta);
        w.key("offending_steps");
        w.begin_array();
        for (int k : wit.offending_steps) w.value(k);
        w.end_array();
        w.key("iterates");
        w.begin_array();
        for (double x : wit.trajectory.iterates) w.value(x);
        w.end_array();
        w.kv("terminal_status", to_string(wit.trajectory.terminal_status));
    }
    w.end_object();
    return w.str() + "\n";
}

inline std::string gamma_domain_to_json(const GammaDomainReport& rep) {
    JsonWriter w;
    w.begin_object();
    w.kv("alpha", rep.alpha);
    w.key("rows");
    w.begin_array();
    for (const GammaDomainRow& r : rep.rows) {
        w.begin_object();
        w.kv("i", r.i);
        w.kv("gamma_argument", r.gamma_argument);
        w.kv("strict_fails", r.strict_fails);
        w.kv("strict_error", r.strict_error);
        w.kv("extended_value", r.extended_value);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    return w.str() + "\n";
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fracgrad
