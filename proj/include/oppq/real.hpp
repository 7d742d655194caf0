#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <ios>
#include <string>

#include "oppq/errors.hpp"

namespace oppq {

/// Arbitrary-precision scalar.  Precision is set per session (thread) in
/// decimal digits; values carry their construction-time precision and
/// arithmetic results inherit the widest operand.
using Real = boost::multiprecision::mpfr_float;

inline constexpr int kMinDigits = 30;
inline constexpr int kGuardDigits = 10;

/// RAII working-precision scope.  Every Real constructed while the scope is
/// alive gets `digits` decimal digits.  Scopes nest; destruction restores the
/// previous session precision.
class PrecisionScope {
  public:
    explicit PrecisionScope(int digits) : previous_(Real::default_precision()) {
        if (digits < kMinDigits)
            throw ConfigError("working precision must be at least " +
                              std::to_string(kMinDigits) + " digits, got " +
                              std::to_string(digits));
        Real::default_precision(static_cast<unsigned>(digits));
    }
    ~PrecisionScope() { Real::default_precision(previous_); }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

  private:
    unsigned previous_;
};

inline int session_digits() { return static_cast<int>(Real::default_precision()); }

/// Smallest decimal string that parses back to the identical value at the
/// same working precision (bit-exact round trip).
inline std::string to_exact_string(const Real& x) {
    return x.str(0, std::ios_base::scientific);
}

/// Parses a decimal string at the current session precision.
inline Real parse_real(const std::string& text) {
    try {
        return Real(text);
    } catch (const std::exception&) {
        throw ConfigError("not a decimal number: '" + text + "'");
    }
}

/// Backward-error residual tolerance at the session precision: ten guard
/// digits below the working digit count, applied relative to the magnitude
/// of the terms entering a residual.
inline Real residual_tolerance() {
    return pow(Real(10), -(session_digits() - kGuardDigits));
}

inline Real sqrt_two_pi() {
    return sqrt(2 * boost::math::constants::pi<Real>());
}

/// x!, exact for nonnegative integer arguments.
inline Real factorial(long n) {
    Real r(1);
    for (long k = 2; k <= n; ++k) r *= k;
    return r;
}

}  // namespace oppq
