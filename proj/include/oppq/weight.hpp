#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "oppq/errors.hpp"
#include "oppq/linalg.hpp"
#include "oppq/quadrature.hpp"
#include "oppq/real.hpp"

namespace oppq {

/// Reference weight attached to a problem's expansion basis.
///
/// * HermiteHalfline: R(xi) = exp(-xi/2) / sqrt(xi) on [0, inf) — the
///   half-line image of the Gaussian ground form for even-parity problems.
/// * QzmExp: R(xi,eta) = exp(-(field/2) xi eta - alpha (xi + eta)) with
///   alpha = sqrt(eps0/2); eps0 stays frozen while the moment relation is
///   scanned in the binding parameter.
struct WeightSpec {
    enum class Kind { HermiteHalfline, QzmExp };
    Kind kind = Kind::HermiteHalfline;
    Real field = 0;  // QzmExp: field strength
    Real eps0 = 0;   // QzmExp: frozen binding parameter inside the weight

    std::string signature() const {
        if (kind == Kind::HermiteHalfline) return "hermite_halfline";
        return "qzm_exp;B=" + to_exact_string(field) + ";eps0=" + to_exact_string(eps0);
    }
};

/// Power moments of the half-line weight: w(p) = Gamma(p + 1/2) 2^{p+1/2}.
inline std::vector<Real> weight_moments_1d(const WeightSpec& spec, long p_max) {
    if (spec.kind != WeightSpec::Kind::HermiteHalfline)
        throw ConfigError("1D weight moments requested for a 2D weight");
    std::vector<Real> w(static_cast<size_t>(p_max) + 1);
    for (long p = 0; p <= p_max; ++p)
        w[static_cast<size_t>(p)] =
            boost::math::tgamma(Real(2 * p + 1) / 2) * pow(Real(2), Real(2 * p + 1) / 2);
    return w;
}

/// Exact coefficient vector of the degree-eta orthonormal polynomial of the
/// half-line weight (monomial coefficients, constant term first):
///
///   P_eta(xi) = (-1/2)^eta sqrt((2 eta)!) / (2 pi)^{1/4}
///               * sum_j (-2)^j / ((eta-j)! (2j)!) xi^j
///
/// Normalized to a positive leading coefficient, which this closed form
/// already has.
inline Vec halfline_closed_form(long eta) {
    Vec c(static_cast<size_t>(eta) + 1);
    const Real front = pow(Real(-1) / 2, static_cast<long>(eta)) * sqrt(factorial(2 * eta)) /
                       pow(2 * boost::math::constants::pi<Real>(), Real(1) / 4);
    for (long j = 0; j <= eta; ++j)
        c[static_cast<size_t>(j)] =
            front * pow(Real(-2), j) / (factorial(eta - j) * factorial(2 * j));
    return c;
}

/// Auxiliary integral ladder for the 2D exponential weight:
///
///   Omega(m, n+1, g) = integral_0^inf t^m e^{-t} (1 + g t)^{-(n+1)} dt,
///
/// stored as omega(m, n).  The base entry comes from split adaptive
/// Gauss-Legendre quadrature; the m = 0 row from the alternating closed-form
/// sum; higher m from the three-term raise.  Every accumulation tracks its
/// largest-term-to-result ratio: the digits it cancels away come out of the
/// loss budget `session - required_digits + (kGuardDigits - 5)`, and
/// exceeding the budget throws CancellationDetected so the caller can retry
/// at a higher working precision (which widens the budget) instead of
/// accepting entries with fewer than `required_digits - kGuardDigits`
/// trustworthy digits.  `required_digits <= 0` means the session precision.
inline Mat omega_table(const Real& g, long m_max, long n_max, int required_digits = 0) {
    if (g <= 0) throw ConfigError("omega ladder needs positive g");
    const int digits = session_digits();
    if (required_digits <= 0) required_digits = digits;
    const Real rel_tol = pow(Real(10), -(digits - 5));
    const Real loss_cap =
        pow(Real(10), digits - required_digits + (static_cast<int>(kGuardDigits) - 5));

    Mat om(m_max + 1, n_max + 1);

    {  // Base entry by quadrature, panels split at the pole scale 1/g.
        const Real inv_g = 1 / g;
        const Real cutoff = Real(digits + 10) * log(Real(10));
        std::vector<Real> bp{Real(0)};
        for (Real s = inv_g; s < cutoff; s *= 2) bp.push_back(s);
        for (Real s = Real(10); s < cutoff; s += 10)
            if (s > inv_g) bp.push_back(s);
        bp.push_back(cutoff);
        std::sort(bp.begin(), bp.end());
        bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
        auto f = [&](const Real& s) { return exp(-s) / (1 + g * s); };
        om(0, 0) = integrate_panels(f, bp, rel_tol);
    }

    // m = 0 row: Omega(0, n+1) as the alternating factorial sum over the
    // base entry.
    for (long n = 1; n <= n_max; ++n) {
        Real sum(0), largest(0);
        Real ratio(1);  // (n-j)!/n! built incrementally
        Real gpow(1);
        int sign = 1;
        for (long j = 1; j <= n; ++j) {
            ratio /= Real(n - j + 1);
            gpow *= g;
            const Real term = Real(sign) * ratio / gpow;
            sum += term;
            if (abs(term) > largest) largest = abs(term);
            sign = -sign;
        }
        const Real tail = Real(sign) * om(0, 0) / (gpow * factorial(n));
        sum += tail;
        if (abs(tail) > largest) largest = abs(tail);
        if (sum == 0 || largest / abs(sum) > loss_cap)
            throw CancellationDetected("alternating ladder row lost too many digits at n=" +
                                       std::to_string(n) + ", " + std::to_string(digits) +
                                       " digits");
        om(0, n) = sum;
    }

    // Raise m: Omega(m+1, n+1) = delta_{m,0}/g + (m/g) Omega(m-1, n+1)
    //          + (m - n - 1/g) Omega(m, n+1).
    const Real inv_g = 1 / g;
    for (long m = 0; m < m_max; ++m) {
        for (long n = 0; n <= n_max; ++n) {
            Real sum(0), largest(0);
            auto acc = [&](const Real& term) {
                sum += term;
                if (abs(term) > largest) largest = abs(term);
            };
            if (m == 0) acc(inv_g);
            if (m >= 1) acc(Real(m) * inv_g * om(m - 1, n));
            acc((Real(m - n) - inv_g) * om(m, n));
            if (sum == 0 || largest / abs(sum) > loss_cap)
                throw CancellationDetected("ladder raise lost too many digits at (m,n)=(" +
                                           std::to_string(m + 1) + "," + std::to_string(n) + ")");
            om(m + 1, n) = sum;
        }
    }
    return om;
}

/// Full rectangle of 2D weight moments w(m,n) for m, n <= max_each:
///
///   w(m,n) = n! / alpha^{m+n+2} * Omega(m, n+1, g),
///   alpha = sqrt(eps0/2), g = field/eps0,
///
/// computed symmetrically (canonical m <= n) so w(m,n) == w(n,m) holds
/// exactly.  Retries internally at escalated precision when the Omega
/// ladder flags cancellation, rounding results back to the session
/// precision; rethrows only when escalation is exhausted.
inline Mat qzm_weight_moments(const WeightSpec& spec, long max_each) {
    if (spec.kind != WeightSpec::Kind::QzmExp)
        throw ConfigError("2D weight moments requested for a 1D weight");
    if (spec.eps0 <= 0 || spec.field <= 0)
        throw ConfigError("2D exponential weight needs positive field and eps0");
    const int base_digits = session_digits();

    for (int boost_factor = 1; boost_factor <= 8; boost_factor *= 2) {
        try {
            Mat w(max_each + 1, max_each + 1);
            {
                PrecisionScope scope(base_digits * boost_factor);
                const Real eps0(to_exact_string(spec.eps0));
                const Real field(to_exact_string(spec.field));
                const Real alpha = sqrt(eps0 / 2);
                const Real g = field / eps0;
                const Mat om = omega_table(g, max_each, max_each, base_digits);
                for (long mm = 0; mm <= max_each; ++mm) {
                    Real fac = factorial(mm);  // n! for the canonical n = larger index
                    for (long nn = mm; nn <= max_each; ++nn) {
                        if (nn > mm) fac *= nn;  // keep n! in step with nn
                        const Real val = fac / pow(alpha, mm + nn + 2) * om(mm, nn);
                        if (!(val > 0))
                            throw CancellationDetected("nonpositive 2D weight moment at (" +
                                                       std::to_string(mm) + "," + std::to_string(nn) +
                                                       ")");
                        w(mm, nn) = val;
                        w(nn, mm) = val;
                    }
                }
            }
            // Round back to the session precision.
            for (long i = 0; i <= max_each; ++i)
                for (long j = 0; j <= max_each; ++j) w(i, j).precision(static_cast<unsigned>(base_digits));
            return w;
        } catch (const CancellationDetected&) {
            if (boost_factor == 8) throw;
        }
    }
    throw CancellationDetected("unreachable");
}

}  // namespace oppq
