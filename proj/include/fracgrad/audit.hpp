#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fracgrad/optimize.hpp"

namespace fracgrad {

/// The tail coefficient of the update series after reindexing: the update
/// magnitude at a point x with gap delta is |sum_i coeff_i * delta^(i+1-alpha)|
/// where coeff_i = binom(alpha-1, i) * f^(i+1)(x) / Gamma(i+2-alpha).
/// These coefficients are what the sup-based bound takes its sup over, and
/// their signs are what the sign counterexample exhibits.
inline double tail_coefficient(const DifferentiableFunction& f, double alpha, int i, double x) {
    if (i < 0) throw std::invalid_argument("tail_coefficient: index must be >= 0");
    return gen_binomial(alpha - 1.0, i, GammaMode::Extended) * derivative(f, i + 1, x) /
           gamma(i + 2.0 - alpha, GammaMode::Extended);
}

class InsufficientTailError : public std::runtime_error {
  public:
    explicit InsufficientTailError(const std::string& why) : std::runtime_error(why) {}
};

/// Inputs that select which part of a trajectory gets audited.  Absent
/// fields are resolved against the trajectory: the claimed limit defaults
/// to the final iterate, epsilon to half the distance between the claimed
/// limit and the true extremum, and the tail start to the first iterate
/// inside the epsilon ball around the claimed limit.
struct AuditOptions {
    std::optional<double> claimed_limit;    ///< X
    std::optional<double> true_extremum;    ///< x*, required unless epsilon is given
    std::optional<double> epsilon;
    std::optional<int> tail_start;          ///< N; steps k > N are audited
    int index_cap = 32;                     ///< highest coefficient index entering the bounds
};

/// Sup-based quantities over the audited tail.  sigma_paper is the signed
/// supremum of the tail coefficients, which is what the published bound
/// uses; sigma_abs is the supremum of their absolute values, which is what
/// the triangle inequality actually licenses.  sign_discrepancy marks the
/// gap between the two.  d_* = mu * sigma_* / (1 - epsilon); NaN when no
/// epsilon applies.
struct SigmaReport {
    double sigma_paper = 0.0;
    double sigma_abs = 0.0;
    bool sign_discrepancy = false;
    double d_paper = std::numeric_limits<double>::quiet_NaN();
    double d_abs = std::numeric_limits<double>::quiet_NaN();
};

/// All numbers of the inequality chain for one audited step, plus the
/// verdicts.  Naming: lhs_12a is the audited quantity mu * |D_k|;
/// series_12c is the same quantity rebuilt from the reindexed coefficient
/// series (an identity check); bound_12d_paper substitutes the signed sup
/// and keeps the published ">=" reading; bound_12d_corrected substitutes
/// the absolute sup, which upper-bounds the series by the triangle
/// inequality; triangle_12d keeps each |coefficient| instead of a sup and
/// is the tightest form.  geom_sum_12e closes the geometric series, which
/// requires delta < 1; bound_12f_paper is the closed form d * delta^(1-alpha).
struct StepAudit {
    int k = 0;
    double x_value = 0.0;
    double delta = 0.0;
    double lhs_12a = 0.0;
    double series_12c = 0.0;
    double triangle_12d = 0.0;
    double bound_12d_paper = 0.0;
    double bound_12d_corrected = 0.0;
    double geom_sum_12e = std::numeric_limits<double>::quiet_NaN();
    double bound_12f_paper = std::numeric_limits<double>::quiet_NaN();
    bool geometric_ok = false;        ///< delta < 1, needed to close the geometric sum
    bool epsilon_ok = false;          ///< delta < epsilon, needed for the final bound
    bool paper_direction_holds = false;      ///< lhs_12a >= bound_12d_paper
    bool corrected_direction_holds = false;  ///< lhs_12a <= bound_12d_corrected + slack
    bool tail_ok = true;  ///< terms the series used beyond index_cap all fall below abs_tol
};

struct AuditReport {
    double alpha = 0.0;
    double mu = 0.0;
    double claimed_limit = 0.0;
    double epsilon = 0.0;
    int tail_start = 0;      ///< N
    int first_audited = 0;   ///< first audited step index
    int index_cap = 32;
    double slack = 0.0;      ///< index_cap * abs_tol * mu, truncation allowance on the bound
    SigmaReport sigma;
    std::vector<StepAudit> steps;
    // convenience tallies over `steps`
    int paper_fail_count = 0;
    int corrected_fail_count = 0;
    int geometric_fail_count = 0;
    int epsilon_fail_count = 0;
};

/// Recompute the inequality chain along a recorded run and report, step by
/// step, which links hold.  The audited steps are those after the tail
/// start (and past any classical bootstrap steps).  Throws
/// InsufficientTailError when the trajectory is too short, never enters the
/// epsilon ball, or leaves no step strictly between the tail start and the
/// final step.
inline AuditReport audit_trajectory(const DifferentiableFunction& f, const FractionalConfig& cfg,
                                    Algorithm algo, const Trajectory& traj,
                                    const AuditOptions& opts = {}) {
    if (!cfg.schedule.is_constant())
        throw std::invalid_argument("audit requires a constant differentiation order");
    if (opts.index_cap < 0) throw std::invalid_argument("audit: index_cap must be >= 0");
    const double alpha = cfg.schedule.constant_value();
    const auto n_steps = static_cast<int>(traj.steps.size());
    if (static_cast<int>(traj.iterates.size()) < cfg.lag + 2)
        throw InsufficientTailError("trajectory has " + std::to_string(traj.iterates.size()) +
                                    " iterates; auditing needs at least K+2 = " +
                                    std::to_string(cfg.lag + 2));

    AuditReport rep;
    rep.alpha = alpha;
    rep.mu = cfg.mu;
    rep.index_cap = opts.index_cap;
    rep.claimed_limit = opts.claimed_limit.value_or(traj.iterates.back());

    if (opts.epsilon) {
        rep.epsilon = *opts.epsilon;
    } else if (opts.true_extremum) {
        rep.epsilon = std::abs(*opts.true_extremum - rep.claimed_limit) / 2.0;
    } else {
        throw std::invalid_argument("audit: pass either epsilon or the true extremum");
    }
    if (!(rep.epsilon > 0.0))
        throw std::invalid_argument(
            "audit: epsilon must be > 0 (claimed limit may coincide with the true extremum; "
            "pass epsilon explicitly)");
    if (opts.true_extremum) {
        double gap = std::abs(*opts.true_extremum - rep.claimed_limit);
        if (gap > 0.0 && !(rep.epsilon < gap))
            throw std::invalid_argument(
                "audit: epsilon must be smaller than |true extremum - claimed limit|");
    }

    if (opts.tail_start) {
        rep.tail_start = *opts.tail_start;
        if (rep.tail_start < 0 || rep.tail_start >= n_steps)
            throw std::invalid_argument("audit: tail start must name a recorded step");
    } else {
        int found = -1;
        for (int k = 0; k < static_cast<int>(traj.iterates.size()); ++k) {
            if (std::abs(traj.iterates[static_cast<std::size_t>(k)] - rep.claimed_limit) <
                rep.epsilon) {
                found = k;
                break;
            }
        }
        if (found < 0)
            throw InsufficientTailError("no iterate enters the epsilon ball around the claimed limit");
        rep.tail_start = found;
    }

    // Classical bootstrap steps are not series updates, so the chain does
    // not describe them; start after them.
    int first_fractional = (algo == Algorithm::Algo1 && cfg.warmup == WarmupPolicy::GDBootstrap)
                               ? cfg.lag
                               : 0;
    rep.first_audited = std::max(rep.tail_start + 1, first_fractional);
    const int last_audited = n_steps - 2;  // strictly before the final step
    if (rep.first_audited > last_audited)
        throw InsufficientTailError("no audited steps lie strictly between the tail start and the "
                                    "end of the run");

    const double abs_tol = cfg.truncation.abs_tol;
    rep.slack = static_cast<double>(opts.index_cap) * abs_tol * cfg.mu;

    // Pass 1: coefficient table and the two sups.
    const int n_audited = last_audited - rep.first_audited + 1;
    const int width = opts.index_cap + 1;
    std::vector<double> coeff(static_cast<std::size_t>(n_audited) * static_cast<std::size_t>(width));
    rep.sigma.sigma_paper = -std::numeric_limits<double>::infinity();
    rep.sigma.sigma_abs = 0.0;
    for (int row = 0; row < n_audited; ++row) {
        const double x_k = traj.iterates[static_cast<std::size_t>(rep.first_audited + row)];
        for (int i = 0; i < width; ++i) {
            double c = tail_coefficient(f, alpha, i, x_k);
            coeff[static_cast<std::size_t>(row) * width + i] = c;
            rep.sigma.sigma_paper = std::max(rep.sigma.sigma_paper, c);
            rep.sigma.sigma_abs = std::max(rep.sigma.sigma_abs, std::abs(c));
        }
    }
    rep.sigma.sign_discrepancy = (rep.sigma.sigma_paper <= 0.0 && rep.sigma.sigma_abs > 0.0) ||
                                 rep.sigma.sigma_abs > rep.sigma.sigma_paper;
    rep.sigma.d_paper = cfg.mu * rep.sigma.sigma_paper / (1.0 - rep.epsilon);
    rep.sigma.d_abs = cfg.mu * rep.sigma.sigma_abs / (1.0 - rep.epsilon);

    // Pass 2: chain values per audited step.
    rep.steps.reserve(static_cast<std::size_t>(n_audited));
    for (int row = 0; row < n_audited; ++row) {
        const int k = rep.first_audited + row;
        const StepRecord& step = traj.steps[static_cast<std::size_t>(k)];
        StepAudit sa;
        sa.k = k;
        sa.x_value = traj.iterates[static_cast<std::size_t>(k)];
        sa.delta = step.lag_gap;
        sa.lhs_12a = cfg.mu * std::abs(step.deriv);

        // Rebuild the update from the reindexed coefficients, using exactly
        // as many terms as the recorded evaluation did.
        double series = 0.0;
        for (int i = 0; i < step.terms_used; ++i) {
            double c = (i < width) ? coeff[static_cast<std::size_t>(row) * width + i]
                                   : tail_coefficient(f, alpha, i, sa.x_value);
            series += c * std::pow(sa.delta, i + 1.0 - alpha);
        }
        sa.series_12c = cfg.mu * std::abs(series);

        double triangle = 0.0;
        double geom = 0.0;
        for (int i = 0; i < width; ++i) {
            triangle += std::abs(coeff[static_cast<std::size_t>(row) * width + i]) *
                        std::pow(sa.delta, i + 1.0 - alpha);
            geom += std::pow(sa.delta, static_cast<double>(i));
        }
        sa.triangle_12d = cfg.mu * triangle;
        const double head = std::pow(sa.delta, 1.0 - alpha);
        sa.bound_12d_paper = cfg.mu * rep.sigma.sigma_paper * head * geom;
        sa.bound_12d_corrected = cfg.mu * rep.sigma.sigma_abs * head * geom;

        sa.geometric_ok = sa.delta < 1.0;
        if (sa.geometric_ok) sa.geom_sum_12e = head / (1.0 - sa.delta);
        sa.epsilon_ok = sa.delta < rep.epsilon;
        sa.bound_12f_paper = rep.sigma.d_paper * head;

        sa.paper_direction_holds = sa.lhs_12a >= sa.bound_12d_paper;
        sa.corrected_direction_holds = sa.lhs_12a <= sa.bound_12d_corrected + rep.slack;

        sa.tail_ok = true;
        for (int i = width; i < step.terms_used; ++i) {
            double term = tail_coefficient(f, alpha, i, sa.x_value) *
                          std::pow(sa.delta, i + 1.0 - alpha);
            if (!(std::abs(term) < abs_tol)) {
                sa.tail_ok = false;
                break;
            }
        }

        if (!sa.paper_direction_holds) ++rep.paper_fail_count;
        if (!sa.corrected_direction_holds) ++rep.corrected_fail_count;
        if (!sa.geometric_ok) ++rep.geometric_fail_count;
        if (!sa.epsilon_ok) ++rep.epsilon_fail_count;
        rep.steps.push_back(sa);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Counterexample generators
// ---------------------------------------------------------------------------

/// Per-index summary of the tail coefficients of f(x) = -1/(1-x) over a
/// sample of points.  sign is +1/-1 when every sampled coefficient at this
/// index shares that sign, 0 otherwise.
struct IndexCoefficientSummary {
    int i = 0;
    double min_coeff = 0.0;
    double max_coeff = 0.0;
    double max_abs = 0.0;
    int sign = 0;
    bool sign_consistent = false;
};

struct SigmaSignConfig {
    double alpha = 0.5;
    double x_lo = 0.05;  ///< sample range, must stay inside (0, 1)
    double x_hi = 0.95;
    int n_samples = 19;
    int index_cap = 32;
};

struct SigmaSignReport {
    SigmaSignConfig config;
    SigmaReport sigma;                           ///< d_* stay NaN: no run, no epsilon
    std::vector<IndexCoefficientSummary> index_summary;
    bool alternating = false;  ///< coefficient signs flip at every index
    bool growing = false;      ///< max |coefficient| increases with the index
};

/// Exhibit a function whose tail coefficients alternate in sign and grow
/// without bound: f(x) = -1/(1-x) on (0, 1).  A signed sup over such
/// coefficients discards every other term, so a bound built from it cannot
/// dominate the series; the absolute sup keeps growing instead of settling.
inline SigmaSignReport counterexample_sigma_sign(const SigmaSignConfig& cfg = {}) {
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
        throw std::invalid_argument("sigma-sign: alpha must lie in (0, 1]");
    if (!(0.0 < cfg.x_lo && cfg.x_lo < cfg.x_hi && cfg.x_hi < 1.0))
        throw std::invalid_argument("sigma-sign: need 0 < x_lo < x_hi < 1");
    if (cfg.n_samples < 2) throw std::invalid_argument("sigma-sign: need at least 2 samples");
    if (cfg.index_cap < 1) throw std::invalid_argument("sigma-sign: index_cap must be >= 1");

    const DifferentiableFunction f = DifferentiableFunction::rational_pole(-1.0, 1.0);
    SigmaSignReport rep;
    rep.config = cfg;
    rep.sigma.sigma_paper = -std::numeric_limits<double>::infinity();
    rep.sigma.sigma_abs = 0.0;

    const double span = cfg.x_hi - cfg.x_lo;
    for (int i = 0; i <= cfg.index_cap; ++i) {
        IndexCoefficientSummary sm;
        sm.i = i;
        sm.min_coeff = std::numeric_limits<double>::infinity();
        sm.max_coeff = -std::numeric_limits<double>::infinity();
        bool all_pos = true, all_neg = true;
        for (int s = 0; s < cfg.n_samples; ++s) {
            double x = cfg.x_lo + span * static_cast<double>(s) / (cfg.n_samples - 1);
            double c = tail_coefficient(f, cfg.alpha, i, x);
            sm.min_coeff = std::min(sm.min_coeff, c);
            sm.max_coeff = std::max(sm.max_coeff, c);
            sm.max_abs = std::max(sm.max_abs, std::abs(c));
            all_pos = all_pos && c > 0.0;
            all_neg = all_neg && c < 0.0;
        }
        sm.sign_consistent = all_pos || all_neg;
        sm.sign = all_pos ? 1 : (all_neg ? -1 : 0);
        rep.sigma.sigma_paper = std::max(rep.sigma.sigma_paper, sm.max_coeff);
        rep.sigma.sigma_abs = std::max(rep.sigma.sigma_abs, sm.max_abs);
        rep.index_summary.push_back(sm);
    }
    rep.sigma.sign_discrepancy =
        (rep.sigma.sigma_paper <= 0.0 && rep.sigma.sigma_abs > 0.0) ||
        rep.sigma.sigma_abs > rep.sigma.sigma_paper;

    rep.alternating = true;
    rep.growing = true;
    for (std::size_t j = 0; j < rep.index_summary.size(); ++j) {
        if (!rep.index_summary[j].sign_consistent) rep.alternating = false;
        if (j > 0) {
            if (rep.index_summary[j].sign != -rep.index_summary[j - 1].sign)
                rep.alternating = false;
            if (!(rep.index_summary[j].max_abs > rep.index_summary[j - 1].max_abs))
                rep.growing = false;
        }
    }
    return rep;
}

struct GeometricSearchConfig {
    DifferentiableFunction f = DifferentiableFunction::shifted_quadratic(0.0, 1.0);
    double alpha = 0.5;
    std::vector<double> mus{0.25, 0.5, 1.0, 1.5};
    std::vector<double> x0s{1.5, 3.0};
    std::vector<int> lags{1, 2};
    int max_iters = 25;
    TruncationPolicy truncation;
};

/// A run in which some audited gap reaches 1, so the geometric series the
/// closed-form bound relies on does not converge.
struct GeometricWitness {
    bool found = false;
    double mu = 0.0;
    double x0 = 0.0;
    int lag = 0;
    int k = -1;           ///< first offending step
    double delta = 0.0;   ///< its gap
    std::vector<int> offending_steps;
    FractionalConfig config;
    Trajectory trajectory;
};

/// Grid-search step gains, starting points, and lags for a moving-terminal
/// run whose gap |x_k - x_{k-K}| reaches 1 at some audited step.  The scan
/// order is fixed (mu, then x0, then lag) so the witness is deterministic.
/// found == false means the grid is exhausted; for functions whose update
/// never moves (for instance a constant) that is the expected outcome.
inline GeometricWitness counterexample_geometric(const GeometricSearchConfig& search = {}) {
    if (search.mus.empty() || search.x0s.empty() || search.lags.empty())
        throw std::invalid_argument("geometric search: empty grid");
    GeometricWitness best;
    for (double mu : search.mus) {
        for (double x0 : search.x0s) {
            for (int lag : search.lags) {
                FractionalConfig cfg;
                cfg.schedule = OrderSchedule::constant(search.alpha);
                cfg.mu = mu;
                cfg.lag = lag;
                cfg.x0 = x0;
                cfg.warmup = WarmupPolicy::GDBootstrap;
                cfg.truncation = search.truncation;
                cfg.stop.step_tol = 0.0;
                cfg.stop.max_iters = search.max_iters;
                Trajectory traj = run(search.f, cfg, Algorithm::Algo1);
                std::vector<int> offending;
                for (int k = lag; k < static_cast<int>(traj.steps.size()); ++k) {
                    if (traj.steps[static_cast<std::size_t>(k)].lag_gap >= 1.0)
                        offending.push_back(k);
                }
                if (!offending.empty()) {
                    best.found = true;
                    best.mu = mu;
                    best.x0 = x0;
                    best.lag = lag;
                    best.k = offending.front();
                    best.delta = traj.steps[static_cast<std::size_t>(best.k)].lag_gap;
                    best.offending_steps = std::move(offending);
                    best.config = cfg;
                    best.trajectory = std::move(traj);
                    return best;
                }
            }
        }
    }
    return best;
}

/// One coefficient index at which the strict gamma (positive arguments
/// only) cannot evaluate the series coefficient, against the value the
/// reflection-extended gamma assigns.
struct GammaDomainRow {
    int i = 0;
    double gamma_argument = 0.0;  ///< alpha - i + 1, the offending argument
    bool strict_fails = false;
    std::string strict_error;
    double extended_value = 0.0;
};

struct GammaDomainReport {
    double alpha = 0.0;
    std::vector<GammaDomainRow> rows;
};

/// For order alpha in (0, 1], every series coefficient with index i >= 2
/// asks for Gamma(alpha - i + 1) with a non-positive-or-fractional-negative
/// argument, which a gamma defined only on (0, inf) rejects outright.
inline GammaDomainReport counterexample_gamma_domain(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("gamma-domain: alpha must lie in (0, 1]");
    GammaDomainReport rep;
    rep.alpha = alpha;
    for (int i = 2; i <= 6; ++i) {
        GammaDomainRow row;
        row.i = i;
        row.gamma_argument = alpha - i + 1.0;
        try {
            (void)gen_binomial(alpha - 1.0, i - 1, GammaMode::Strict);
            row.strict_fails = false;
        } catch (const DomainError& e) {
            row.strict_fails = true;
            row.strict_error = e.what();
        }
        row.extended_value = gen_binomial(alpha - 1.0, i - 1, GammaMode::Extended);
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace fracgrad
