#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fracgrad/errors.hpp"
#include "fracgrad/format.hpp"

namespace fracgrad {

/// Open interval on which a catalog function is analytic.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double x) const { return x > lo && x < hi; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Coefficients in ascending degree: coeffs[j] multiplies x^j.
struct Polynomial {
    std::vector<double> coeffs;

    friend bool operator==(const Polynomial&, const Polynomial&) = default;
};

/// a * exp(b x)
struct Exponential {
    double a = 1.0;
    double b = 1.0;

    friend bool operator==(const Exponential&, const Exponential&) = default;
};

/// s / (r - x); the pole at x = r is excluded from the domain.
struct RationalPole {
    double s = -1.0;
    double r = 1.0;

    friend bool operator==(const RationalPole&, const RationalPole&) = default;
};

/// scale * (x - x_star)^2
struct ShiftedQuadratic {
    double x_star = 0.0;
    double scale = 1.0;

    friend bool operator==(const ShiftedQuadratic&, const ShiftedQuadratic&) = default;
};

/// A test function together with exact closed-form derivatives of every
/// order.  This is the derivative oracle the fractional series consumes;
/// nothing here is approximated.
struct DifferentiableFunction {
    std::variant<Polynomial, Exponential, RationalPole, ShiftedQuadratic> kind;
    Interval domain;

    static DifferentiableFunction polynomial(std::vector<double> coeffs) {
        return {Polynomial{std::move(coeffs)}, Interval{}};
    }
    static DifferentiableFunction constant(double v) { return polynomial({v}); }
    static DifferentiableFunction exponential(double a, double b) {
        return {Exponential{a, b}, Interval{}};
    }
    /// Defaults to the branch left of the pole, which is where the
    /// sigma-sign counterexample f(x) = -1/(1-x), x in (0,1) lives.
    static DifferentiableFunction rational_pole(double s, double r) {
        return {RationalPole{s, r}, Interval{-std::numeric_limits<double>::infinity(), r}};
    }
    static DifferentiableFunction shifted_quadratic(double x_star, double scale) {
        return {ShiftedQuadratic{x_star, scale}, Interval{}};
    }

    /// Largest i with f^(i) not identically zero, when that is finite.
    /// Drives the exact-finite termination of the fractional series.
    std::optional<int> max_nonzero_order() const {
        if (const auto* p = std::get_if<Polynomial>(&kind)) {
            int deg = -1;
            for (std::size_t j = 0; j < p->coeffs.size(); ++j)
                if (p->coeffs[j] != 0.0) deg = static_cast<int>(j);
            return std::max(deg, 0);
        }
        if (std::holds_alternative<ShiftedQuadratic>(kind)) return 2;
        return std::nullopt;
    }

    friend bool operator==(const DifferentiableFunction&, const DifferentiableFunction&) = default;
};

namespace detail {

inline double poly_derivative(const Polynomial& p, int i, double x) {
    double sum = 0.0;
    // Horner over the i-th derived coefficients, highest degree first.
    for (int j = static_cast<int>(p.coeffs.size()) - 1; j >= i; --j) {
        double fall = 1.0;
        for (int m = 0; m < i; ++m) fall *= static_cast<double>(j - m);
        sum = sum * x + p.coeffs[static_cast<std::size_t>(j)] * fall;
    }
    return sum;
}

inline double rational_pole_derivative(const RationalPole& rp, int i, double x) {
    // f^(i)(x) = s * i! / (r-x)^(i+1); accumulated factor-by-factor so the
    // i! and the power cannot overflow independently of each other.
    const double u = rp.r - x;
    double v = rp.s / u;
    for (int j = 1; j <= i; ++j) v *= static_cast<double>(j) / u;
    return v;
}

}  // namespace detail

/// Exact i-th derivative of f at x; i = 0 returns f(x).
inline double derivative(const DifferentiableFunction& f, int i, double x) {
    if (i < 0) throw std::invalid_argument("derivative: order must be non-negative");
    if (!f.domain.contains(x)) throw DomainError(DomainFault::OutsideFunctionDomain, x);
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Polynomial>) {
                return detail::poly_derivative(k, i, x);
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return k.a * std::pow(k.b, i) * std::exp(k.b * x);
            } else if constexpr (std::is_same_v<T, RationalPole>) {
                return detail::rational_pole_derivative(k, i, x);
            } else {
                if (i == 0) return k.scale * (x - k.x_star) * (x - k.x_star);
                if (i == 1) return 2.0 * k.scale * (x - k.x_star);
                if (i == 2) return 2.0 * k.scale;
                return 0.0;
            }
        },
        f.kind);
}

// ---------------------------------------------------------------------------
// Order schedules for the variable-order scheme
// ---------------------------------------------------------------------------

/// Where the state-dependent order alpha(x) is evaluated.  The source
/// scheme never says, so the choice is an explicit policy.
enum class AlphaEvalPolicy { AtCurrentIterate, AtLowerTerminal, Frozen };

struct ConstantOrder {
    double alpha = 0.5;

    friend bool operator==(const ConstantOrder&, const ConstantOrder&) = default;
};

/// Bounded logistic ramp from alpha_min to alpha_max, centered at
/// `center`; stays strictly inside (alpha_min, alpha_max) for all x.
struct SigmoidalOrder {
    double alpha_min = 0.1;
    double alpha_max = 0.9;
    double center = 0.0;
    double slope = 1.0;

    friend bool operator==(const SigmoidalOrder&, const SigmoidalOrder&) = default;
};

struct OrderSchedule {
    std::variant<ConstantOrder, SigmoidalOrder> kind;
    AlphaEvalPolicy eval_policy = AlphaEvalPolicy::AtCurrentIterate;
    double frozen_x = 0.0;  // used only when eval_policy == Frozen

    static OrderSchedule constant(double alpha) {
        return {ConstantOrder{alpha}, AlphaEvalPolicy::AtCurrentIterate, 0.0};
    }
    static OrderSchedule sigmoidal(double amin, double amax, double center, double slope,
                                   AlphaEvalPolicy policy = AlphaEvalPolicy::AtCurrentIterate,
                                   double frozen_x = 0.0) {
        return {SigmoidalOrder{amin, amax, center, slope}, policy, frozen_x};
    }

    bool is_constant() const { return std::holds_alternative<ConstantOrder>(kind); }
    double constant_value() const { return std::get<ConstantOrder>(kind).alpha; }

    friend bool operator==(const OrderSchedule&, const OrderSchedule&) = default;
};

/// Evaluate the order schedule at the point selected by its policy.
/// Result is always in (0, 1) for well-formed schedules.
inline double schedule_alpha(const OrderSchedule& s, double x_current, double x_terminal) {
    double x = x_current;
    switch (s.eval_policy) {
        case AlphaEvalPolicy::AtCurrentIterate: x = x_current; break;
        case AlphaEvalPolicy::AtLowerTerminal: x = x_terminal; break;
        case AlphaEvalPolicy::Frozen: x = s.frozen_x; break;
    }
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, ConstantOrder>) {
                return k.alpha;
            } else {
                double t = 1.0 / (1.0 + std::exp(-k.slope * (x - k.center)));
                return k.alpha_min + (k.alpha_max - k.alpha_min) * t;
            }
        },
        s.kind);
}

// ---------------------------------------------------------------------------
// Descriptor syntax: "kind:param,param,..." as used by config files and
// the command line, e.g. poly:0,0,1  const:5  exp:1,-0.5  ratpole:-1,1
// shifted_quad:3,1
// ---------------------------------------------------------------------------

inline DifferentiableFunction parse_function(const std::string& descriptor) {
    auto colon = descriptor.find(':');
    std::string kind = descriptor.substr(0, colon);
    std::vector<double> params;
    if (colon != std::string::npos) {
        std::stringstream ss(descriptor.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            std::size_t pos = 0;
            double v = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument("bad number in descriptor: " + tok);
            params.push_back(v);
        }
    }
    auto need = [&](std::size_t n) {
        if (params.size() != n)
            throw std::invalid_argument("function '" + kind + "' expects " + std::to_string(n) +
                                        " parameters, got " + std::to_string(params.size()));
    };
    if (kind == "poly") {
        if (params.empty()) throw std::invalid_argument("poly needs at least one coefficient");
        return DifferentiableFunction::polynomial(params);
    }
    if (kind == "const") {
        need(1);
        return DifferentiableFunction::constant(params[0]);
    }
    if (kind == "exp") {
        need(2);
        return DifferentiableFunction::exponential(params[0], params[1]);
    }
    if (kind == "ratpole") {
        need(2);
        return DifferentiableFunction::rational_pole(params[0], params[1]);
    }
    if (kind == "shifted_quad") {
        need(2);
        return DifferentiableFunction::shifted_quadratic(params[0], params[1]);
    }
    throw std::invalid_argument("unknown function kind: " + kind);
}

inline std::string format_function(const DifferentiableFunction& f) {
    return std::visit(
        [](const auto& k) -> std::string {
            using T = std::decay_t<decltype(k)>;
            std::string out;
            auto join = [&](std::initializer_list<double> vs) {
                bool first = true;
                for (double v : vs) {
                    if (!first) out += ',';
                    out += format_signif17(v);
                    first = false;
                }
            };
            if constexpr (std::is_same_v<T, Polynomial>) {
                out = "poly:";
                bool first = true;
                for (double c : k.coeffs) {
                    if (!first) out += ',';
                    out += format_signif17(c);
                    first = false;
                }
            } else if constexpr (std::is_same_v<T, Exponential>) {
                out = "exp:";
                join({k.a, k.b});
            } else if constexpr (std::is_same_v<T, RationalPole>) {
                out = "ratpole:";
                join({k.s, k.r});
            } else {
                out = "shifted_quad:";
                join({k.x_star, k.scale});
            }
            return out;
        },
        f.kind);
}

}  // namespace fracgrad
