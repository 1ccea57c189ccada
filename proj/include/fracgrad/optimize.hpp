#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fracgrad/caputo.hpp"

namespace fracgrad {

enum class Algorithm { Algo1, Algo3, ClassicalGD };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Algo1: return "algo1";
        case Algorithm::Algo3: return "algo3";
        case Algorithm::ClassicalGD: return "gd";
    }
    return "unknown";
}

/// How the lagged terminal x_{k-K} is supplied before K steps exist.
/// ReplicateX0 fills the missing history with x0; note that this gives the
/// first step a zero gap, and with alpha < 1 a zero-gap series evaluates
/// to 0, so the moving-terminal scheme never leaves x0.  GDBootstrap runs
/// K classical steps first, which is the variant that actually moves.
enum class WarmupPolicy { ReplicateX0, GDBootstrap };

inline const char* to_string(WarmupPolicy w) {
    return w == WarmupPolicy::ReplicateX0 ? "replicate_x0" : "gd_bootstrap";
}

/// What to do when the iterate has fallen below its lagged terminal, where
/// the real power (x-c)^(i-alpha) is undefined.  MirrorGap evaluates the
/// series on the reflected terminal x_k - |x_k - x_{k-K}|, so the power
/// base is the non-negative gap and the leading term keeps the sign of
/// f'(x_k).  HardError refuses.
enum class TerminalOrderPolicy { MirrorGap, HardError };

inline const char* to_string(TerminalOrderPolicy p) {
    return p == TerminalOrderPolicy::MirrorGap ? "mirror" : "hard_error";
}

class TerminalOrderError : public std::runtime_error {
  public:
    TerminalOrderError(double x_current, double terminal)
        : std::runtime_error("iterate " + std::to_string(x_current) +
                             " is not above its lower terminal " + std::to_string(terminal)) {}
};

struct StopRule {
    double step_tol = 1e-10;  ///< stop when |x_{k+1} - x_k| < step_tol
    int max_iters = 100;

    friend bool operator==(const StopRule&, const StopRule&) = default;
};

/// Everything one optimizer run depends on.  Fully determines the
/// trajectory; two runs with equal configs serialize identically.
struct FractionalConfig {
    OrderSchedule schedule = OrderSchedule::constant(0.5);
    double mu = 0.1;            ///< step gain, > 0
    int lag = 1;                ///< K, moving-terminal lag of Algorithm 1
    double fixed_terminal = 0.0;  ///< c, fixed lower terminal of Algorithm 3
    double x0 = 0.0;
    WarmupPolicy warmup = WarmupPolicy::ReplicateX0;
    TerminalOrderPolicy terminal_policy = TerminalOrderPolicy::MirrorGap;
    TruncationPolicy truncation;
    GammaMode gamma_mode = GammaMode::Extended;
    StopRule stop;

    friend bool operator==(const FractionalConfig&, const FractionalConfig&) = default;
};

struct StepRecord {
    double deriv = 0.0;      ///< D_k, the derivative value the update used
    int terms_used = 0;
    SeriesStatus series_status = SeriesStatus::ExactFinite;
    double lag_gap = 0.0;    ///< |x_k - x_{k-K}| (Algo1) or |x_k - c| (Algo3)
};

enum class TerminalStatus {
    StoppedByTolerance,
    MaxIters,
    SeriesDomainError,
    Diverged,           ///< iterate left the representable range
    SeriesDivergence,   ///< series flagged divergence; the partial sum is not used
};

inline const char* to_string(TerminalStatus s) {
    switch (s) {
        case TerminalStatus::StoppedByTolerance: return "stopped_by_tolerance";
        case TerminalStatus::MaxIters: return "max_iters";
        case TerminalStatus::SeriesDomainError: return "series_domain_error";
        case TerminalStatus::Diverged: return "diverged";
        case TerminalStatus::SeriesDivergence: return "series_divergence";
    }
    return "unknown";
}

/// Recorded run: iterates x_0..x_T plus one record per step.
/// steps.size() + 1 == iterates.size(), and every consecutive pair obeys
/// x_{k+1} = x_k - mu * steps[k].deriv with the same rounding path the run
/// used.
struct Trajectory {
    std::vector<double> iterates;
    std::vector<StepRecord> steps;
    TerminalStatus terminal_status = TerminalStatus::MaxIters;
    std::string terminal_detail;
};

namespace detail {

inline SeriesResult lagged_series(const DifferentiableFunction& f, const FractionalConfig& cfg,
                                  double alpha, double x_current, double terminal) {
    if (x_current >= terminal)
        return caputo_series(f, alpha, terminal, x_current, cfg.truncation, cfg.gamma_mode);
    if (cfg.terminal_policy == TerminalOrderPolicy::HardError)
        throw TerminalOrderError(x_current, terminal);
    double mirrored = x_current - std::abs(x_current - terminal);
    return caputo_series(f, alpha, mirrored, x_current, cfg.truncation, cfg.gamma_mode);
}

}  // namespace detail

/// One update of the moving-terminal scheme:
/// x_{k+1} = x_k - mu * caputo(f, alpha, c = x_{k-K}) evaluated at x_k.
/// `history` holds x_{k-K}..x_k, oldest first.
inline std::pair<double, StepRecord> algo1_step(const DifferentiableFunction& f,
                                                const FractionalConfig& cfg,
                                                std::span<const double> history) {
    if (history.size() < 2)
        throw std::invalid_argument("algo1_step: history must hold at least x_{k-K} and x_k");
    if (!cfg.schedule.is_constant())
        throw std::invalid_argument("algo1_step: Algorithm 1 uses a constant order");
    const double x_current = history.back();
    const double terminal = history.front();
    SeriesResult series =
        detail::lagged_series(f, cfg, cfg.schedule.constant_value(), x_current, terminal);
    StepRecord rec{series.value, series.terms_used, series.status,
                   std::abs(x_current - terminal)};
    double next = x_current - cfg.mu * series.value;
    return {next, rec};
}

/// One update of the variable-order scheme with fixed terminal c.  The
/// order alpha(x) is evaluated once per step, at the point selected by the
/// schedule's policy, and held fixed across all series terms.
inline std::pair<double, StepRecord> algo3_step(const DifferentiableFunction& f,
                                                const FractionalConfig& cfg, double x_current) {
    const double alpha = schedule_alpha(cfg.schedule, x_current, cfg.fixed_terminal);
    SeriesResult series = detail::lagged_series(f, cfg, alpha, x_current, cfg.fixed_terminal);
    StepRecord rec{series.value, series.terms_used, series.status,
                   std::abs(x_current - cfg.fixed_terminal)};
    double next = x_current - cfg.mu * series.value;
    return {next, rec};
}

inline void validate(const FractionalConfig& cfg, Algorithm algo) {
    if (!(cfg.mu > 0.0)) throw std::invalid_argument("config: mu must be > 0");
    if (cfg.lag < 1) throw std::invalid_argument("config: K must be >= 1");
    if (cfg.stop.max_iters < 1) throw std::invalid_argument("config: max_iters must be >= 1");
    if (!(cfg.stop.step_tol >= 0.0)) throw std::invalid_argument("config: step_tol must be >= 0");
    if (algo == Algorithm::Algo1 && !cfg.schedule.is_constant())
        throw std::invalid_argument("config: Algorithm 1 requires a constant order");
    if (cfg.schedule.is_constant()) {
        double a = cfg.schedule.constant_value();
        if (!(a > 0.0 && a <= 1.0))
            throw std::invalid_argument("config: alpha must lie in (0, 1]");
    }
}

/// Iterate the selected scheme from cfg.x0 until the stop rule fires or an
/// evaluation error ends the run.  Deterministic: a fixed config always
/// produces the same trajectory, bit for bit.
inline Trajectory run(const DifferentiableFunction& f, const FractionalConfig& cfg,
                      Algorithm algo) {
    validate(cfg, algo);
    if (!f.domain.contains(cfg.x0)) throw DomainError(DomainFault::OutsideFunctionDomain, cfg.x0);

    Trajectory traj;
    traj.iterates.push_back(cfg.x0);

    const int lag = cfg.lag;
    for (int k = 0;; ++k) {
        if (k >= cfg.stop.max_iters) {
            traj.terminal_status = TerminalStatus::MaxIters;
            return traj;
        }
        const double x_current = traj.iterates.back();

        double deriv = 0.0;
        StepRecord rec;
        try {
            if (algo == Algorithm::ClassicalGD ||
                (algo == Algorithm::Algo1 && cfg.warmup == WarmupPolicy::GDBootstrap && k < lag)) {
                deriv = derivative(f, 1, x_current);
                double ref = traj.iterates[static_cast<std::size_t>(std::max(k - lag, 0))];
                rec = StepRecord{deriv, 1, SeriesStatus::ExactFinite,
                                 std::abs(x_current - ref)};
            } else if (algo == Algorithm::Algo1) {
                double terminal = (k >= lag)
                                      ? traj.iterates[static_cast<std::size_t>(k - lag)]
                                      : cfg.x0;  // ReplicateX0 virtual history
                SeriesResult series = detail::lagged_series(
                    f, cfg, cfg.schedule.constant_value(), x_current, terminal);
                if (series.status == SeriesStatus::DivergenceSuspected) {
                    traj.terminal_status = TerminalStatus::SeriesDivergence;
                    traj.terminal_detail = "series divergence suspected at k=" + std::to_string(k);
                    return traj;
                }
                deriv = series.value;
                rec = StepRecord{deriv, series.terms_used, series.status,
                                 std::abs(x_current - terminal)};
            } else {
                auto [next_unused, record] = algo3_step(f, cfg, x_current);
                (void)next_unused;
                if (record.series_status == SeriesStatus::DivergenceSuspected) {
                    traj.terminal_status = TerminalStatus::SeriesDivergence;
                    traj.terminal_detail = "series divergence suspected at k=" + std::to_string(k);
                    return traj;
                }
                deriv = record.deriv;
                rec = record;
            }
        } catch (const DomainError& e) {
            traj.terminal_status = TerminalStatus::SeriesDomainError;
            traj.terminal_detail = e.what();
            return traj;
        } catch (const OverflowError& e) {
            traj.terminal_status = TerminalStatus::SeriesDomainError;
            traj.terminal_detail = e.what();
            return traj;
        } catch (const TerminalOrderError& e) {
            traj.terminal_status = TerminalStatus::SeriesDomainError;
            traj.terminal_detail = e.what();
            return traj;
        }

        const double next = x_current - cfg.mu * deriv;
        traj.steps.push_back(rec);
        traj.iterates.push_back(next);

        if (!std::isfinite(next)) {
            traj.terminal_status = TerminalStatus::Diverged;
            traj.terminal_detail = "iterate overflow at k=" + std::to_string(k + 1);
            return traj;
        }
        if (std::abs(next - x_current) < cfg.stop.step_tol) {
            traj.terminal_status = TerminalStatus::StoppedByTolerance;
            return traj;
        }
    }
}

}  // namespace fracgrad
