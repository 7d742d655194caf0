#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "oppq/errors.hpp"
#include "oppq/real.hpp"

namespace oppq {

/// Gauss–Legendre nodes/weights on [-1, 1] at the session precision.
/// Nodes come from Newton iteration on the Legendre recurrence seeded with
/// the Chebyshev angle estimates; node sets are cached per (count, digits).
struct GaussLegendre {
    std::vector<Real> nodes;
    std::vector<Real> weights;
};

inline const GaussLegendre& gauss_legendre(int n) {
    static thread_local std::map<std::pair<int, int>, GaussLegendre> cache;
    const auto key = std::make_pair(n, session_digits());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    GaussLegendre gl;
    gl.nodes.resize(static_cast<size_t>(n));
    gl.weights.resize(static_cast<size_t>(n));
    const Real pi = boost::math::constants::pi<Real>();
    const Real tol = pow(Real(10), -(session_digits() - 2));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        Real x = cos(pi * (4 * i + 3) / (4 * n + 2));
        Real dp(0);
        for (int iter = 0; iter < 200; ++iter) {
            // Legendre three-term recurrence for P_n(x) and P_n'(x).
            Real p0(1), p1 = x;
            for (int k = 2; k <= n; ++k) {
                Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            const Real step = p1 / dp;
            x -= step;
            if (abs(step) < tol * (abs(x) + 1)) break;
        }
        const Real w = 2 / ((1 - x * x) * dp * dp);
        gl.nodes[static_cast<size_t>(i)] = -x;
        gl.weights[static_cast<size_t>(i)] = w;
        gl.nodes[static_cast<size_t>(n - 1 - i)] = x;
        gl.weights[static_cast<size_t>(n - 1 - i)] = w;
    }
    return cache.emplace(key, std::move(gl)).first->second;
}

inline Real gauss_panel(const std::function<Real(const Real&)>& f, const Real& a,
                        const Real& b, int n) {
    const auto& gl = gauss_legendre(n);
    const Real mid = (a + b) / 2, half = (b - a) / 2;
    Real s(0);
    for (size_t i = 0; i < gl.nodes.size(); ++i)
        s += gl.weights[i] * f(mid + half * gl.nodes[i]);
    return s * half;
}

/// Integrates f over [a, b], doubling the node count until two successive
/// refinements agree to the requested relative tolerance (scaled against
/// `scale_hint` + the current estimate so that near-zero panels of a larger
/// integral terminate).
inline Real integrate_adaptive(const std::function<Real(const Real&)>& f, const Real& a,
                               const Real& b, const Real& rel_tol,
                               const Real& scale_hint = Real(0)) {
    int n = 16;
    Real prev = gauss_panel(f, a, b, n);
    for (int round = 0; round < 12; ++round) {
        n *= 2;
        const Real cur = gauss_panel(f, a, b, n);
        if (abs(cur - prev) <= rel_tol * (abs(cur) + scale_hint)) return cur;
        prev = cur;
    }
    throw PrecisionExhausted("quadrature did not settle on [" + to_exact_string(a) +
                             ", " + to_exact_string(b) + "] at " +
                             std::to_string(session_digits()) + " digits");
}

/// Integrates f over a split [0, upper] described by interior breakpoints.
inline Real integrate_panels(const std::function<Real(const Real&)>& f,
                             const std::vector<Real>& breakpoints, const Real& rel_tol) {
    Real scale(0);
    // First sweep at modest order to size the total, so per-panel tolerances
    // are relative to the whole integral rather than to tiny tail panels.
    for (size_t k = 0; k + 1 < breakpoints.size(); ++k)
        scale += abs(gauss_panel(f, breakpoints[k], breakpoints[k + 1], 32));
    Real total(0);
    for (size_t k = 0; k + 1 < breakpoints.size(); ++k)
        total += integrate_adaptive(f, breakpoints[k], breakpoints[k + 1], rel_tol, scale);
    return total;
}

}  // namespace oppq
