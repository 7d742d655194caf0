#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oppq/basis.hpp"
#include "oppq/errors.hpp"
#include "oppq/indexing.hpp"
#include "oppq/linalg.hpp"
#include "oppq/mer.hpp"
#include "oppq/real.hpp"

namespace oppq {

/// Projection coefficients of the expansion members onto the missing-moment
/// directions at one energy: vectors[n][ell] is the coefficient multiplying
/// u_ell in the degree/index-n projection c_n(E, u).
struct LambdaTable {
    long max_order = 0;
    Real energy;
    long width = 0;
    bool has_derivative = false;
    std::vector<Vec> vectors;
    std::vector<Vec> dvectors;
};

/// Accumulated projection matrix P_I(E) = sum_{n<=I} Lambda_n Lambda_n^T and
/// optionally its energy derivative.
struct PMatrix {
    long order = 0;
    Real energy;
    Mat p;
    Mat dp;
    bool has_derivative = false;
};

/// One functional evaluation: the quantity whose local minima and level-set
/// roots drive the energy brackets.
struct EnergyFunctional {
    long order = 0;
    Real energy;
    Real value;
    std::optional<Real> derivative;
    Vec optimizer;             // missing-moment direction attaining the value
    bool degenerate_gap = false;  // smallest eigen-gap below 1e-6 * value
};

/// Contracts Lambda vectors from a basis and a moment table:
///   Lambda_n[ell] = sum_{j<=n} xi[n][j] * M(index_j, ell).
inline LambdaTable lambda_vectors(const BasisTable& basis, const CoeffTable& table, long order,
                                  bool with_derivative = false) {
    if (order > basis.n_max)
        throw CoverageError("basis covers orders up to " + std::to_string(basis.n_max) +
                            ", requested " + std::to_string(order));
    if (basis.dimension != table.dimension)
        throw ConfigError("basis and moment table dimensionality differ");
    if (basis.dimension == 1 && table.max_index < order)
        throw CoverageError("1D moment table ends at " + std::to_string(table.max_index) +
                            ", order " + std::to_string(order) + " needs that many moments");
    if (basis.dimension == 2) {
        const Monomial2D top = monomial_at(order);
        if (table.max_index < top.m + top.n)
            throw CoverageError("2D moment table covers degree " + std::to_string(table.max_index) +
                                ", order " + std::to_string(order) + " needs degree " +
                                std::to_string(top.m + top.n));
    }
    if (with_derivative && !table.has_derivative)
        throw ConfigError("derivative projections need a derivative-bearing moment table");

    LambdaTable lt;
    lt.max_order = order;
    lt.energy = table.energy;
    lt.width = table.width();
    lt.has_derivative = with_derivative;
    lt.vectors.assign(static_cast<size_t>(order) + 1, Vec());
    if (with_derivative) lt.dvectors.assign(static_cast<size_t>(order) + 1, Vec());

    for (long n = 0; n <= order; ++n) {
        const Vec& coeffs = basis.xi[static_cast<size_t>(n)];
        Vec v(static_cast<size_t>(lt.width), Real(0));
        Vec dv;
        if (with_derivative) dv.assign(static_cast<size_t>(lt.width), Real(0));
        for (long j = 0; j <= n; ++j) {
            const Real& c = coeffs[static_cast<size_t>(j)];
            const Vec& row = table.row_for_monomial(j);
            for (long l = 0; l < lt.width; ++l) v[static_cast<size_t>(l)] += c * row[static_cast<size_t>(l)];
            if (with_derivative) {
                const Vec& drow = table.drow_for_monomial(j);
                for (long l = 0; l < lt.width; ++l)
                    dv[static_cast<size_t>(l)] += c * drow[static_cast<size_t>(l)];
            }
        }
        lt.vectors[static_cast<size_t>(n)] = std::move(v);
        if (with_derivative) lt.dvectors[static_cast<size_t>(n)] = std::move(dv);
    }
    return lt;
}

/// Truncated positive sum S_I(E, u) = sum_{n<=I} (Lambda_n . u)^2.
inline Real partial_sum(const LambdaTable& lt, const Vec& u, long order = -1) {
    if (order < 0) order = lt.max_order;
    if (order > lt.max_order) throw CoverageError("partial sum order exceeds the Lambda table");
    Real s(0);
    for (long n = 0; n <= order; ++n) {
        const Real c = dot(lt.vectors[static_cast<size_t>(n)], u);
        s += c * c;
    }
    return s;
}

inline PMatrix p_matrix(const LambdaTable& lt, bool with_derivative = false) {
    if (with_derivative && !lt.has_derivative)
        throw ConfigError("derivative projection matrix needs derivative Lambda vectors");
    PMatrix pm;
    pm.order = lt.max_order;
    pm.energy = lt.energy;
    pm.has_derivative = with_derivative;
    const long w = lt.width;
    pm.p = Mat(w, w);
    if (with_derivative) pm.dp = Mat(w, w);
    for (long n = 0; n <= lt.max_order; ++n) {
        const Vec& v = lt.vectors[static_cast<size_t>(n)];
        for (long i = 0; i < w; ++i)
            for (long j = i; j < w; ++j) pm.p(i, j) += v[static_cast<size_t>(i)] * v[static_cast<size_t>(j)];
        if (with_derivative) {
            const Vec& dv = lt.dvectors[static_cast<size_t>(n)];
            for (long i = 0; i < w; ++i)
                for (long j = i; j < w; ++j)
                    pm.dp(i, j) += dv[static_cast<size_t>(i)] * v[static_cast<size_t>(j)] +
                                   v[static_cast<size_t>(i)] * dv[static_cast<size_t>(j)];
        }
    }
    for (long i = 0; i < w; ++i)
        for (long j = 0; j < i; ++j) {
            pm.p(i, j) = pm.p(j, i);
            if (with_derivative) pm.dp(i, j) = pm.dp(j, i);
        }
    return pm;
}

namespace detail {

struct EigenPair {
    Real value;
    Vec vector;
    Real gap_estimate;  // second-smallest minus smallest; <0 when unknown
};

/// Smallest eigenpair of a symmetric positive-definite matrix.  Closed form
/// through dimension two; Cholesky-backed inverse iteration with a final
/// Rayleigh-shift refinement above that (no general QR machinery).
inline EigenPair smallest_eigenpair(const Mat& p) {
    const long n = p.rows();
    if (n == 1) return {p(0, 0), Vec{Real(1)}, Real(-1)};
    if (n == 2) {
        const Real a = p(0, 0), b = p(0, 1), c = p(1, 1);
        const Real mean = (a + c) / 2;
        const Real disc = sqrt((a - c) * (a - c) / 4 + b * b);
        const Real lo = mean - disc;
        Vec v{b, lo - a};
        if (norm2(v) == 0) v = Vec{lo - c, b};
        if (norm2(v) == 0) v = Vec{Real(1), Real(0)};
        const Real nrm = norm2(v);
        v[0] /= nrm;
        v[1] /= nrm;
        return {lo, std::move(v), 2 * disc};
    }

    Mat chol;
    try {
        chol = cholesky_lower(p);
    } catch (const CholeskyNotPD&) {
        throw NotPositiveDefinite("projection matrix of dimension " + std::to_string(n) +
                                  " is not numerically positive definite");
    }

    const Real tol = residual_tolerance();
    Vec v(static_cast<size_t>(n), Real(1));
    {
        const Real nrm = norm2(v);
        for (auto& x : v) x /= nrm;
    }
    Real rho(0);
    Real prev(-1);
    for (int iter = 0; iter < 600; ++iter) {
        Vec w = cholesky_solve(chol, v);
        const Real nrm = norm2(w);
        for (auto& x : w) x /= nrm;
        v = std::move(w);
        rho = dot(v, matvec(p, v));
        if (iter > 0 && abs(rho - prev) <= tol * abs(rho)) break;
        prev = rho;
    }
    // Rayleigh-shift refinement: two solves against (P - rho I) sharpen the
    // eigenpair cubically; a singular shifted solve means rho is already at
    // working-precision accuracy.
    for (int round = 0; round < 2; ++round) {
        Mat shifted = p;
        for (long i = 0; i < n; ++i) shifted(i, i) -= rho;
        try {
            const Lu f = lu_factor(shifted);
            Vec w = lu_solve(f, v);
            const Real nrm = norm2(w);
            if (nrm == 0) break;
            for (auto& x : w) x /= nrm;
            v = std::move(w);
            rho = dot(v, matvec(p, v));
        } catch (const LinearSolveSingular&) {
            break;
        }
    }

    // Deflated inverse iteration for a gap estimate (degeneracy reporting
    // only, so a handful of sweeps is enough).
    Vec u(static_cast<size_t>(n), Real(1));
    u[0] = 2;  // deterministic, not parallel to v in practice
    Real rho2(-1);
    for (int iter = 0; iter < 25; ++iter) {
        const Real proj = dot(u, v);
        for (size_t i = 0; i < u.size(); ++i) u[i] -= proj * v[i];
        const Real nrm = norm2(u);
        if (nrm == 0) break;
        for (auto& x : u) x /= nrm;
        u = cholesky_solve(chol, u);
        const Real n2 = norm2(u);
        if (n2 == 0) break;
        for (auto& x : u) x /= n2;
        rho2 = dot(u, matvec(p, u));
    }
    return {rho, std::move(v), rho2 > 0 ? rho2 - rho : Real(-1)};
}

}  // namespace detail

/// Smallest eigenvalue of the projection matrix under the unit-norm
/// constraint, with the optional Hellmann–Feynman energy derivative
/// d lambda = <u|dP|u>.
inline EnergyFunctional lambda_min(const PMatrix& pm) {
    detail::EigenPair e = detail::smallest_eigenpair(pm.p);
    EnergyFunctional f;
    f.order = pm.order;
    f.energy = pm.energy;
    f.value = e.value;
    f.optimizer = std::move(e.vector);
    if (e.gap_estimate >= 0 && e.gap_estimate < Real("1e-6") * abs(e.value)) f.degenerate_gap = true;
    if (pm.has_derivative) f.derivative = dot(f.optimizer, matvec(pm.dp, f.optimizer));
    if (!(f.value > 0))
        throw NotPositiveDefinite("smallest projection eigenvalue is not positive at energy " +
                                  to_exact_string(pm.energy));
    return f;
}

/// Constrained quadratic-form minimum with the leading missing-moment
/// component pinned to one:
///   L_I(E) = min_{u, u_0 = 1} <u|P_I|u> = C - B^T A^{-1} B,
/// where C = P_00, B = P[1.., 0], A = P[1.., 1..].  The derivative uses the
/// envelope theorem: dL = <v|dP|v> at the optimizer v = (1, -A^{-1}B).
inline EnergyFunctional cqfm_value(const PMatrix& pm) {
    const long w = pm.p.rows();
    EnergyFunctional f;
    f.order = pm.order;
    f.energy = pm.energy;
    if (w == 1) {
        f.value = pm.p(0, 0);
        f.optimizer = Vec{Real(1)};
    } else {
        Mat a(w - 1, w - 1);
        Vec bcol(static_cast<size_t>(w) - 1);
        for (long i = 1; i < w; ++i) {
            bcol[static_cast<size_t>(i - 1)] = pm.p(i, 0);
            for (long j = 1; j < w; ++j) a(i - 1, j - 1) = pm.p(i, j);
        }
        Mat chol;
        try {
            chol = cholesky_lower(a);
        } catch (const CholeskyNotPD&) {
            throw SubmatrixNotPD("lower-right projection block is not positive definite at energy " +
                                 to_exact_string(pm.energy));
        }
        const Vec y = cholesky_solve(chol, bcol);
        f.value = pm.p(0, 0) - dot(bcol, y);
        f.optimizer.assign(static_cast<size_t>(w), Real(1));
        for (long i = 1; i < w; ++i) f.optimizer[static_cast<size_t>(i)] = -y[static_cast<size_t>(i - 1)];
    }
    if (!(f.value > 0))
        throw PrecisionExhausted("constrained quadratic minimum lost positivity at energy " +
                                 to_exact_string(pm.energy) + "; raise the working precision");
    if (pm.has_derivative) f.derivative = dot(f.optimizer, matvec(pm.dp, f.optimizer));
    return f;
}

/// Energy derivative of the unit-norm smallest-eigenvalue functional.
inline Real d_lambda_min(const PMatrix& pm) {
    if (!pm.has_derivative) throw ConfigError("projection matrix was built without derivatives");
    const EnergyFunctional f = lambda_min(pm);
    return *f.derivative;
}

}  // namespace oppq
