#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fracgrad/audit.hpp"
#include "fracgrad/format.hpp"
#include "fracgrad/optimize.hpp"

namespace fracgrad {

/// One experiment, fully described: which scheme, on which function, with
/// which run parameters, plus optional audit inputs and output paths.
/// Serializes to flat `key = value` text and parses back losslessly.
struct ExperimentConfig {
    Algorithm algorithm = Algorithm::Algo1;
    DifferentiableFunction function = DifferentiableFunction::shifted_quadratic(0.0, 1.0);
    FractionalConfig run;
    std::optional<double> x_star;        ///< true extremum, for audits
    std::optional<double> epsilon;
    std::optional<int> tail_start;
    std::optional<int> index_cap;
    std::optional<std::string> output_csv;
    std::optional<std::string> output_json;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "algo1") return Algorithm::Algo1;
    if (s == "algo3") return Algorithm::Algo3;
    if (s == "gd") return Algorithm::ClassicalGD;
    throw std::invalid_argument("unknown algorithm '" + s + "' (expected algo1, algo3, or gd)");
}

inline WarmupPolicy parse_warmup(const std::string& s) {
    if (s == "replicate_x0") return WarmupPolicy::ReplicateX0;
    if (s == "gd_bootstrap") return WarmupPolicy::GDBootstrap;
    throw std::invalid_argument("unknown warmup policy '" + s +
                                "' (expected replicate_x0 or gd_bootstrap)");
}

inline TerminalOrderPolicy parse_terminal_policy(const std::string& s) {
    if (s == "mirror") return TerminalOrderPolicy::MirrorGap;
    if (s == "hard_error") return TerminalOrderPolicy::HardError;
    throw std::invalid_argument("unknown terminal policy '" + s +
                                "' (expected mirror or hard_error)");
}

inline GammaMode parse_gamma_mode(const std::string& s) {
    if (s == "strict") return GammaMode::Strict;
    if (s == "extended") return GammaMode::Extended;
    throw std::invalid_argument("unknown gamma mode '" + s + "' (expected strict or extended)");
}

inline AlphaEvalPolicy parse_alpha_eval(const std::string& s) {
    if (s == "current") return AlphaEvalPolicy::AtCurrentIterate;
    if (s == "terminal") return AlphaEvalPolicy::AtLowerTerminal;
    if (s == "frozen") return AlphaEvalPolicy::Frozen;
    throw std::invalid_argument("unknown alpha evaluation point '" + s +
                                "' (expected current, terminal, or frozen)");
}

inline const char* to_string(AlphaEvalPolicy p) {
    switch (p) {
        case AlphaEvalPolicy::AtCurrentIterate: return "current";
        case AlphaEvalPolicy::AtLowerTerminal: return "terminal";
        case AlphaEvalPolicy::Frozen: return "frozen";
    }
    return "unknown";
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string{};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

inline double parse_double_value(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("key '" + key + "': not a number: '" + s + "'");
    }
}

inline int parse_int_value(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("key '" + key + "': not an integer: '" + s + "'");
    }
}

}  // namespace detail

/// Parse flat `key = value` text.  `#` starts a comment (whole line or
/// trailing), blank lines are skipped, unknown or duplicate keys are
/// errors.  Values may be double-quoted; quoting is required for nothing
/// but tolerated everywhere.  When `seen_keys` is non-null it receives the
/// keys that were actually present, so callers can tell an explicit value
/// from a default.
inline ExperimentConfig parse_experiment(const std::string& text,
                                         std::vector<std::string>* seen_keys = nullptr) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> seen;

    bool schedule_sigmoidal = false;
    SigmoidalOrder sig;
    AlphaEvalPolicy eval = AlphaEvalPolicy::AtCurrentIterate;
    double frozen_x = 0.0;
    double alpha = 0.5;

    while (std::getline(in, line)) {
        ++lineno;
        // Strip comments, but only outside double quotes so quoted values
        // may contain '#'.
        bool in_quotes = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quotes = !in_quotes;
            else if (line[i] == '#' && !in_quotes) {
                line.erase(i);
                break;
            }
        }
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::unquote(detail::trim(line.substr(eq + 1)));
        if (key.empty() || value.empty())
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw std::invalid_argument("line " + std::to_string(lineno) + ": duplicate key '" +
                                        key + "'");
        seen.push_back(key);

        try {
            if (key == "algorithm") cfg.algorithm = parse_algorithm(value);
            else if (key == "function") cfg.function = parse_function(value);
            else if (key == "schedule") {
                if (value == "constant") schedule_sigmoidal = false;
                else if (value == "sigmoidal") schedule_sigmoidal = true;
                else throw std::invalid_argument("unknown schedule '" + value + "'");
            }
            else if (key == "alpha") alpha = detail::parse_double_value(key, value);
            else if (key == "alpha_min") sig.alpha_min = detail::parse_double_value(key, value);
            else if (key == "alpha_max") sig.alpha_max = detail::parse_double_value(key, value);
            else if (key == "alpha_center") sig.center = detail::parse_double_value(key, value);
            else if (key == "alpha_slope") sig.slope = detail::parse_double_value(key, value);
            else if (key == "alpha_eval") eval = parse_alpha_eval(value);
            else if (key == "alpha_frozen_x") frozen_x = detail::parse_double_value(key, value);
            else if (key == "mu") cfg.run.mu = detail::parse_double_value(key, value);
            else if (key == "lag") cfg.run.lag = detail::parse_int_value(key, value);
            else if (key == "fixed_terminal")
                cfg.run.fixed_terminal = detail::parse_double_value(key, value);
            else if (key == "x0") cfg.run.x0 = detail::parse_double_value(key, value);
            else if (key == "warmup") cfg.run.warmup = parse_warmup(value);
            else if (key == "terminal_policy")
                cfg.run.terminal_policy = parse_terminal_policy(value);
            else if (key == "gamma_mode") cfg.run.gamma_mode = parse_gamma_mode(value);
            else if (key == "abs_tol")
                cfg.run.truncation.abs_tol = detail::parse_double_value(key, value);
            else if (key == "max_terms")
                cfg.run.truncation.max_terms = detail::parse_int_value(key, value);
            else if (key == "divergence_window")
                cfg.run.truncation.divergence_window = detail::parse_int_value(key, value);
            else if (key == "step_tol")
                cfg.run.stop.step_tol = detail::parse_double_value(key, value);
            else if (key == "max_iters")
                cfg.run.stop.max_iters = detail::parse_int_value(key, value);
            else if (key == "x_star") cfg.x_star = detail::parse_double_value(key, value);
            else if (key == "epsilon") cfg.epsilon = detail::parse_double_value(key, value);
            else if (key == "tail_start") cfg.tail_start = detail::parse_int_value(key, value);
            else if (key == "index_cap") cfg.index_cap = detail::parse_int_value(key, value);
            else if (key == "output_csv") cfg.output_csv = value;
            else if (key == "output_json") cfg.output_json = value;
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
        }
    }

    if (schedule_sigmoidal)
        cfg.run.schedule = OrderSchedule{sig, eval, frozen_x};
    else
        cfg.run.schedule = OrderSchedule::constant(alpha);
    if (seen_keys) *seen_keys = std::move(seen);
    return cfg;
}

/// Canonical serialization: fixed key order, 17-significant-digit numbers,
/// paths and function descriptors quoted.  parse(serialize(c)) == c, and
/// serializing again reproduces the same bytes.
inline std::string serialize_experiment(const ExperimentConfig& cfg) {
    std::ostringstream out;
    auto num = [&](const char* key, double v) { out << key << " = " << format_signif17(v) << "\n"; };
    auto integer = [&](const char* key, int v) { out << key << " = " << v << "\n"; };
    auto word = [&](const char* key, const char* v) { out << key << " = " << v << "\n"; };
    auto quoted = [&](const char* key, const std::string& v) {
        out << key << " = \"" << v << "\"\n";
    };

    word("algorithm", to_string(cfg.algorithm));
    quoted("function", format_function(cfg.function));
    if (cfg.run.schedule.is_constant()) {
        word("schedule", "constant");
        num("alpha", cfg.run.schedule.constant_value());
    } else {
        const auto& sig = std::get<SigmoidalOrder>(cfg.run.schedule.kind);
        word("schedule", "sigmoidal");
        num("alpha_min", sig.alpha_min);
        num("alpha_max", sig.alpha_max);
        num("alpha_center", sig.center);
        num("alpha_slope", sig.slope);
        word("alpha_eval", to_string(cfg.run.schedule.eval_policy));
        if (cfg.run.schedule.eval_policy == AlphaEvalPolicy::Frozen)
            num("alpha_frozen_x", cfg.run.schedule.frozen_x);
    }
    num("mu", cfg.run.mu);
    integer("lag", cfg.run.lag);
    num("fixed_terminal", cfg.run.fixed_terminal);
    num("x0", cfg.run.x0);
    word("warmup", to_string(cfg.run.warmup));
    word("terminal_policy", to_string(cfg.run.terminal_policy));
    word("gamma_mode", to_string(cfg.run.gamma_mode));
    num("abs_tol", cfg.run.truncation.abs_tol);
    integer("max_terms", cfg.run.truncation.max_terms);
    integer("divergence_window", cfg.run.truncation.divergence_window);
    num("step_tol", cfg.run.stop.step_tol);
    integer("max_iters", cfg.run.stop.max_iters);
    if (cfg.x_star) num("x_star", *cfg.x_star);
    if (cfg.epsilon) num("epsilon", *cfg.epsilon);
    if (cfg.tail_start) integer("tail_start", *cfg.tail_start);
    if (cfg.index_cap) integer("index_cap", *cfg.index_cap);
    if (cfg.output_csv) quoted("output_csv", *cfg.output_csv);
    if (cfg.output_json) quoted("output_json", *cfg.output_json);
    return out.str();
}

inline ExperimentConfig load_experiment(const std::string& path,
                                        std::vector<std::string>* seen_keys = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment(buf.str(), seen_keys);
}

inline void save_experiment(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open config file for writing: " + path);
    out << serialize_experiment(cfg);
}

}  // namespace fracgrad
