#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fracgrad/functions.hpp"
#include "fracgrad/special_functions.hpp"

namespace fracgrad {

/// Truncation controls for the fractional series.  The underlying series
/// is infinite; the stop rule is two consecutive sub-tolerance terms
/// (a single small term is fooled by alternating series), capped by
/// max_terms, with a consecutive-growth window for divergence flagging.
struct TruncationPolicy {
    double abs_tol = 1e-14;
    int max_terms = 64;
    int divergence_window = 8;

    friend bool operator==(const TruncationPolicy&, const TruncationPolicy&) = default;
};

enum class SeriesStatus {
    ConvergedByTolerance,
    ExactFinite,        ///< polynomial input, the series genuinely terminates
    TruncatedAtMax,
    DivergenceSuspected,
};

inline const char* to_string(SeriesStatus s) {
    switch (s) {
        case SeriesStatus::ConvergedByTolerance: return "converged_by_tolerance";
        case SeriesStatus::ExactFinite: return "exact_finite";
        case SeriesStatus::TruncatedAtMax: return "truncated_at_max";
        case SeriesStatus::DivergenceSuspected: return "divergence_suspected";
    }
    return "unknown";
}

struct SeriesResult {
    double value = 0.0;
    int terms_used = 0;
    SeriesStatus status = SeriesStatus::ConvergedByTolerance;
    /// (series index i, term value) for every evaluated term.
    std::vector<std::pair<int, double>> term_log;
};

/// Caputo fractional derivative of order alpha in (0, 1] with lower
/// terminal c, evaluated at x > c through the series
///
///   sum_{i>=1} binom(alpha-1, i-1) f^(i)(x) / Gamma(i+1-alpha) (x-c)^(i-alpha)
///
/// At alpha = 1 the generalized binomial zeroes every i >= 2 coefficient
/// and the sum collapses to f'(x) exactly.  At x = c with alpha < 1 every
/// term carries a positive power of zero, so the value is 0.
inline SeriesResult caputo_series(const DifferentiableFunction& f, double alpha, double c,
                                  double x, const TruncationPolicy& policy = {},
                                  GammaMode mode = GammaMode::Extended) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("caputo_series: alpha must lie in (0, 1]");
    if (policy.max_terms < 1 || policy.abs_tol <= 0.0 || policy.divergence_window < 1)
        throw std::invalid_argument("caputo_series: malformed truncation policy");
    if (!f.domain.contains(x)) throw DomainError(DomainFault::OutsideFunctionDomain, x);
    if (!f.domain.contains(c)) throw DomainError(DomainFault::OutsideFunctionDomain, c);
    if (x < c) throw DomainError(DomainFault::LowerTerminalAboveUpper, x);

    SeriesResult res;
    const auto finite_order = f.max_nonzero_order();

    if (x == c && alpha < 1.0) {
        // every term has the factor 0^(i-alpha) with i-alpha > 0
        res.status = (finite_order ? SeriesStatus::ExactFinite : SeriesStatus::ConvergedByTolerance);
        return res;
    }

    const double base = x - c;
    double sum = 0.0;
    int small_run = 0;
    int grow_run = 0;
    double prev_abs = 0.0;

    const bool finite = finite_order.has_value();
    const int last_index = finite ? std::min(*finite_order, policy.max_terms) : policy.max_terms;

    int i = 1;
    for (; i <= last_index; ++i) {
        const double coeff = gen_binomial(alpha - 1.0, i - 1, mode);
        const double gam = gamma(static_cast<double>(i) + 1.0 - alpha, mode);
        const double term = coeff * (derivative(f, i, x) / gam) * std::pow(base, i - alpha);
        sum += term;
        res.term_log.emplace_back(i, term);
        res.terms_used = i;

        if (finite) continue;  // polynomial series terminates on its own

        const double mag = std::abs(term);
        small_run = (mag < policy.abs_tol) ? small_run + 1 : 0;
        if (small_run >= 2) {
            res.value = sum;
            res.status = SeriesStatus::ConvergedByTolerance;
            return res;
        }
        grow_run = (i > 1 && mag > prev_abs) ? grow_run + 1 : 0;
        prev_abs = mag;
        if (grow_run >= policy.divergence_window) {
            res.value = sum;
            res.status = SeriesStatus::DivergenceSuspected;
            return res;
        }
    }

    res.value = sum;
    if (finite)
        res.status = (*finite_order <= policy.max_terms) ? SeriesStatus::ExactFinite
                                                         : SeriesStatus::TruncatedAtMax;
    else
        res.status = SeriesStatus::TruncatedAtMax;
    return res;
}

namespace detail {

/// Gauss-Legendre nodes and weights on (-1, 1), Newton iteration on the
/// three-term recurrence.
inline std::vector<std::pair<double, double>> gauss_legendre(int n) {
    std::vector<std::pair<double, double>> rule(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - z * z) * pp * pp);
        rule[static_cast<std::size_t>(i)] = {-z, w};
        rule[static_cast<std::size_t>(n - 1 - i)] = {z, w};
    }
    return rule;
}

inline const std::vector<std::pair<double, double>>& panel_rule() {
    static const auto rule = gauss_legendre(16);
    return rule;
}

}  // namespace detail

/// Independent oracle for the same derivative: the Caputo integral
///
///   (1/Gamma(1-alpha)) * integral_c^x f'(t) (x-t)^(-alpha) dt
///
/// The substitution u = (x-t)^(1-alpha) absorbs the endpoint singularity
/// exactly, leaving integral_0^(x-c)^(1-alpha) f'(x - u^(1/(1-alpha))) du
/// / (1-alpha).  That is integrated by composite 16-point Gauss-Legendre
/// on a mesh graded toward u = 0, where the substituted integrand keeps a
/// mildly singular high derivative.  Converges as n_nodes grows.
inline double caputo_quadrature(const DifferentiableFunction& f, double alpha, double c, double x,
                                int n_nodes = 400) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("caputo_quadrature: alpha must lie in (0, 1)");
    if (n_nodes < 1) throw std::invalid_argument("caputo_quadrature: n_nodes must be positive");
    if (!f.domain.contains(x)) throw DomainError(DomainFault::OutsideFunctionDomain, x);
    if (!f.domain.contains(c)) throw DomainError(DomainFault::OutsideFunctionDomain, c);
    if (x < c) throw DomainError(DomainFault::LowerTerminalAboveUpper, x);
    if (x == c) return 0.0;  // empty integration interval

    const double one_minus = 1.0 - alpha;
    const double upper = std::pow(x - c, one_minus);
    const double inv_exp = 1.0 / one_minus;
    const int panels = std::max(1, (n_nodes + 15) / 16);
    const auto& rule = detail::panel_rule();

    double integral = 0.0;
    double edge_lo = 0.0;
    for (int j = 0; j < panels; ++j) {
        // cubic grading concentrates panels at the singular end u = 0
        double frac = static_cast<double>(j + 1) / panels;
        double edge_hi = upper * frac * frac * frac;
        double mid = 0.5 * (edge_lo + edge_hi);
        double half = 0.5 * (edge_hi - edge_lo);
        double acc = 0.0;
        for (const auto& [node, weight] : rule) {
            double u = mid + half * node;
            double t = x - std::pow(u, inv_exp);
            acc += weight * derivative(f, 1, t);
        }
        integral += acc * half;
        edge_lo = edge_hi;
    }
    return integral * inv_exp / gamma(one_minus, GammaMode::Extended);
}

}  // namespace fracgrad
