#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace fracgrad {

/// Why a domain check rejected an evaluation.
enum class DomainFault {
    StrictNonPositive,   ///< Gamma argument <= 0 under GammaMode::Strict
    Pole,                ///< Gamma argument is a non-positive integer
    NonFinite,           ///< argument is NaN or infinite
    OutsideFunctionDomain,
    LowerTerminalAboveUpper,  ///< series asked for x < c
};

inline const char* to_string(DomainFault f) {
    switch (f) {
        case DomainFault::StrictNonPositive: return "strict_non_positive";
        case DomainFault::Pole: return "pole";
        case DomainFault::NonFinite: return "non_finite";
        case DomainFault::OutsideFunctionDomain: return "outside_function_domain";
        case DomainFault::LowerTerminalAboveUpper: return "lower_terminal_above_upper";
    }
    return "unknown";
}

namespace detail {
inline std::string domain_message(DomainFault fault, double argument) {
    char buf[160];
    switch (fault) {
        case DomainFault::StrictNonPositive:
            std::snprintf(buf, sizeof buf,
                          "Gamma(%.17g) requested in strict mode: defined only for arguments > 0",
                          argument);
            break;
        case DomainFault::Pole:
            std::snprintf(buf, sizeof buf, "Gamma(%.17g) is a pole (non-positive integer argument)",
                          argument);
            break;
        case DomainFault::NonFinite:
            std::snprintf(buf, sizeof buf, "argument %.17g is not finite", argument);
            break;
        case DomainFault::OutsideFunctionDomain:
            std::snprintf(buf, sizeof buf, "x = %.17g lies outside the function domain", argument);
            break;
        case DomainFault::LowerTerminalAboveUpper:
            std::snprintf(buf, sizeof buf,
                          "evaluation point %.17g lies below the lower terminal", argument);
            break;
        default:
            std::snprintf(buf, sizeof buf, "domain error at %.17g", argument);
    }
    return buf;
}
}  // namespace detail

/// Typed domain rejection. Carries the offending argument so callers can
/// name it in diagnostics (e.g. "Gamma(-0.5)").
class DomainError : public std::domain_error {
  public:
    DomainError(DomainFault fault, double argument)
        : std::domain_error(detail::domain_message(fault, argument)),
          fault_(fault),
          argument_(argument) {}

    DomainFault fault() const noexcept { return fault_; }
    double argument() const noexcept { return argument_; }

  private:
    DomainFault fault_;
    double argument_;
};

/// The magnitude of a result exceeded the representable double range.
/// Kept distinct from DomainError: series code must tell divergence of the
/// mathematics apart from overflow of the representation.
class OverflowError : public std::range_error {
  public:
    explicit OverflowError(double argument)
        : std::range_error("|Gamma| overflows double range at argument " +
                           std::to_string(argument)),
          argument_(argument) {}

    double argument() const noexcept { return argument_; }

  private:
    double argument_;
};

}  // namespace fracgrad
