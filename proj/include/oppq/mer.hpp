#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oppq/errors.hpp"
#include "oppq/indexing.hpp"
#include "oppq/linalg.hpp"
#include "oppq/real.hpp"

namespace oppq {

/// One contribution to a 1D moment recurrence: the target moment picks up
/// (constant_part + energy_part * E) * u(index).
struct RecurrenceTerm {
    long index;
    Real constant_part;
    Real energy_part;
};

/// Energy-dependent moment table.  Every power moment in range is a known
/// linear combination of the free ("missing") moments u_0..u_{m_s}:
///
///   u(p) = sum_ell  values[p][ell] * u_ell            (1D)
///   u(m,n) = sum_ell values[flat(m,n)][ell] * u_ell   (2D, u(m,n) = u(n,m))
///
/// dvalues holds the energy derivatives of the same coefficients when the
/// table was built with derivatives enabled.
struct CoeffTable {
    int dimension = 1;
    Real energy;
    long missing_order = 0;
    long max_index = 0;  // 1D: largest p; 2D: largest total degree m + n
    bool has_derivative = false;
    std::vector<Vec> values;
    std::vector<Vec> dvalues;
    std::optional<SymmetricPairIndex> pairs;  // set for 2D tables

    long width() const { return missing_order + 1; }

    const Real& m(long p, long ell) const {
        return values[static_cast<size_t>(p)][static_cast<size_t>(ell)];
    }
    const Real& dm(long p, long ell) const {
        return dvalues[static_cast<size_t>(p)][static_cast<size_t>(ell)];
    }
    const Real& m2(long mm, long nn, long ell) const {
        return values[static_cast<size_t>(pairs->flat(mm, nn))][static_cast<size_t>(ell)];
    }
    const Real& dm2(long mm, long nn, long ell) const {
        return dvalues[static_cast<size_t>(pairs->flat(mm, nn))][static_cast<size_t>(ell)];
    }

    /// Row of coefficients for a monomial index in the basis ordering.
    const Vec& row_for_monomial(long j) const {
        if (dimension == 1) {
            if (j > max_index) throw CoverageError("moment table ends at index " + std::to_string(max_index));
            return values[static_cast<size_t>(j)];
        }
        const Monomial2D mn = monomial_at(j);
        return values[static_cast<size_t>(pairs->flat(mn.m, mn.n))];
    }
    const Vec& drow_for_monomial(long j) const {
        if (dimension == 1) return dvalues[static_cast<size_t>(j)];
        const Monomial2D mn = monomial_at(j);
        return dvalues[static_cast<size_t>(pairs->flat(mn.m, mn.n))];
    }
};

/// Builds the 1D table for a moment recurrence u(q) = sum of lower terms,
/// q > missing_order, with Kronecker initialization on the free moments.
inline CoeffTable build_coeff_table_1d(
    const std::function<std::vector<RecurrenceTerm>(long)>& step, long missing_order,
    const Real& energy, long max_index, bool with_derivative) {
    CoeffTable t;
    t.dimension = 1;
    t.energy = energy;
    t.missing_order = missing_order;
    t.max_index = max_index;
    t.has_derivative = with_derivative;
    const long w = missing_order + 1;
    t.values.assign(static_cast<size_t>(max_index + 1), Vec(static_cast<size_t>(w), Real(0)));
    if (with_derivative)
        t.dvalues.assign(static_cast<size_t>(max_index + 1), Vec(static_cast<size_t>(w), Real(0)));
    for (long l = 0; l <= missing_order && l <= max_index; ++l)
        t.values[static_cast<size_t>(l)][static_cast<size_t>(l)] = 1;

    for (long q = missing_order + 1; q <= max_index; ++q) {
        auto& row = t.values[static_cast<size_t>(q)];
        for (const RecurrenceTerm& term : step(q)) {
            if (term.index < 0 || term.index >= q)
                throw ConfigError("recurrence for index " + std::to_string(q) +
                                  " referenced invalid index " + std::to_string(term.index));
            const Real coeff = term.constant_part + term.energy_part * energy;
            const auto& src = t.values[static_cast<size_t>(term.index)];
            for (long l = 0; l < w; ++l) row[static_cast<size_t>(l)] += coeff * src[static_cast<size_t>(l)];
            if (with_derivative) {
                auto& drow = t.dvalues[static_cast<size_t>(q)];
                const auto& dsrc = t.dvalues[static_cast<size_t>(term.index)];
                for (long l = 0; l < w; ++l) {
                    drow[static_cast<size_t>(l)] += coeff * dsrc[static_cast<size_t>(l)];
                    if (term.energy_part != 0)
                        drow[static_cast<size_t>(l)] += term.energy_part * src[static_cast<size_t>(l)];
                }
            }
        }
    }
    return t;
}

/// Generates the 2D moment table for the field problem in parabolic-type
/// coordinates: every u(m,n) with m + n <= 2*m_s + 1 expressed over the free
/// diagonal moments u(l,l), l <= m_s.  Works antidiagonal by antidiagonal:
/// the relation instances on degree d form a square linear system for the
/// non-diagonal degree-(d+1) moments, solved by partial-pivot LU and
/// validated by substituting every instance back (backward-error check).
inline CoeffTable generate_qzm_moments(const Real& field, const Real& eps, long missing_order,
                                       bool with_derivative) {
    const long max_degree = 2 * missing_order + 1;
    CoeffTable t;
    t.dimension = 2;
    t.energy = eps;
    t.missing_order = missing_order;
    t.max_index = max_degree;
    t.has_derivative = with_derivative;
    t.pairs.emplace(max_degree);
    const long w = missing_order + 1;
    t.values.assign(static_cast<size_t>(t.pairs->size()), Vec(static_cast<size_t>(w), Real(0)));
    if (with_derivative)
        t.dvalues.assign(static_cast<size_t>(t.pairs->size()), Vec(static_cast<size_t>(w), Real(0)));
    for (long l = 0; l <= missing_order; ++l)
        t.values[static_cast<size_t>(t.pairs->flat(l, l))][static_cast<size_t>(l)] = 1;

    const Real half = Real(1) / 2;

    for (long d = 0; d <= 2 * missing_order; ++d) {
        // Unknowns: canonical degree-(d+1) pairs that are not free diagonals.
        std::vector<Monomial2D> unknowns;
        for (long m = 0; 2 * m <= d + 1; ++m) {
            const long n = d + 1 - m;
            if (m == n) continue;  // free diagonal, Kronecker-initialized
            unknowns.push_back({m, n});
        }
        const long neq = d / 2 + 1;
        const long nunk = static_cast<long>(unknowns.size());
        if (neq != nunk)
            throw LinearSolveSingular("antidiagonal " + std::to_string(d) + " produced " +
                                      std::to_string(neq) + " relations for " +
                                      std::to_string(nunk) + " unknowns");
        auto column_of = [&](long m, long n) -> long {
            if (m > n) std::swap(m, n);
            for (long c = 0; c < nunk; ++c)
                if (unknowns[static_cast<size_t>(c)].m == m && unknowns[static_cast<size_t>(c)].n == n) return c;
            return -1;
        };

        Mat a(neq, nunk);
        Mat rhs(neq, w), drhs(neq, w);

        for (long m = 0; 2 * m <= d; ++m) {
            const long n = d - m;
            const long eq = m;
            const Real cf1 = -half * (field * m + eps);  // multiplies u(m, n+1)
            const Real cf2 = -half * (field * n + eps);  // multiplies u(m+1, n)
            if (cf1 == 0 || cf2 == 0)
                throw SingularStep("vanishing forward coefficient at relation (" +
                                   std::to_string(m) + "," + std::to_string(n) + ")");

            auto add_target = [&](long tm, long tn, const Real& coeff) {
                if (tm > tn) std::swap(tm, tn);
                if (tm == tn) {
                    // Free diagonal: known value delta_{tm,ell}; move across.
                    rhs(eq, tm) -= coeff;  // values row is the Kronecker delta
                    // derivative of a free moment coefficient row is zero
                } else {
                    a(eq, column_of(tm, tn)) += coeff;
                }
            };
            add_target(m, n + 1, cf1);
            add_target(m + 1, n, cf2);

            const Vec& at_mn = t.values[static_cast<size_t>(t.pairs->flat(m, n))];
            for (long l = 0; l < w; ++l) rhs(eq, l) -= at_mn[static_cast<size_t>(l)];
            if (m >= 1) {
                const Vec& low = t.values[static_cast<size_t>(t.pairs->flat(m - 1, n))];
                for (long l = 0; l < w; ++l) rhs(eq, l) -= Real(m) * Real(m) * low[static_cast<size_t>(l)];
            }
            if (n >= 1) {
                const Vec& low = t.values[static_cast<size_t>(t.pairs->flat(m, n - 1))];
                for (long l = 0; l < w; ++l) rhs(eq, l) -= Real(n) * Real(n) * low[static_cast<size_t>(l)];
            }
        }

        const Lu f = lu_factor(a);
        for (long l = 0; l < w; ++l) {
            Vec b(static_cast<size_t>(neq));
            for (long eq = 0; eq < neq; ++eq) b[static_cast<size_t>(eq)] = rhs(eq, l);
            const Vec x = lu_solve(f, b);
            for (long c = 0; c < nunk; ++c)
                t.values[static_cast<size_t>(t.pairs->flat(unknowns[static_cast<size_t>(c)].m,
                                                           unknowns[static_cast<size_t>(c)].n))]
                    [static_cast<size_t>(l)] = x[static_cast<size_t>(c)];
        }

        if (with_derivative) {
            // Same system matrix; extra inhomogeneity from differentiating the
            // energy-dependent forward coefficients (both d/d eps = -1/2), using
            // the degree-(d+1) values just solved.
            for (long m = 0; 2 * m <= d; ++m) {
                const long n = d - m;
                const long eq = m;
                const Vec& v1 = t.values[static_cast<size_t>(t.pairs->flat(m, n + 1))];
                const Vec& v2 = t.values[static_cast<size_t>(t.pairs->flat(m + 1, n))];
                const Vec& dat_mn = t.dvalues[static_cast<size_t>(t.pairs->flat(m, n))];
                for (long l = 0; l < w; ++l) {
                    Real s = half * (v1[static_cast<size_t>(l)] + v2[static_cast<size_t>(l)]);
                    s -= dat_mn[static_cast<size_t>(l)];
                    if (m >= 1)
                        s -= Real(m) * Real(m) *
                             t.dvalues[static_cast<size_t>(t.pairs->flat(m - 1, n))][static_cast<size_t>(l)];
                    if (n >= 1)
                        s -= Real(n) * Real(n) *
                             t.dvalues[static_cast<size_t>(t.pairs->flat(m, n - 1))][static_cast<size_t>(l)];
                    drhs(eq, l) = s;
                }
            }
            for (long l = 0; l < w; ++l) {
                Vec b(static_cast<size_t>(neq));
                for (long eq = 0; eq < neq; ++eq) b[static_cast<size_t>(eq)] = drhs(eq, l);
                const Vec x = lu_solve(f, b);
                for (long c = 0; c < nunk; ++c)
                    t.dvalues[static_cast<size_t>(t.pairs->flat(unknowns[static_cast<size_t>(c)].m,
                                                                unknowns[static_cast<size_t>(c)].n))]
                        [static_cast<size_t>(l)] = x[static_cast<size_t>(c)];
            }
        }
    }

    // Backward-error validation: substitute the full table into every
    // generated relation instance.
    const Real tol = residual_tolerance();
    for (long d = 0; d <= 2 * missing_order; ++d) {
        for (long m = 0; 2 * m <= d; ++m) {
            const long n = d - m;
            for (long l = 0; l < w; ++l) {
                Real res(0), scale(0);
                auto acc = [&](const Real& coeff, long am, long an) {
                    const Real term = coeff * t.m2(am, an, l);
                    res += term;
                    scale += abs(term);
                };
                if (m >= 1) acc(Real(m) * Real(m), m - 1, n);
                if (n >= 1) acc(Real(n) * Real(n), m, n - 1);
                acc(-half * (field * m + eps), m, n + 1);
                acc(-half * (field * n + eps), m + 1, n);
                acc(Real(1), m, n);
                if (abs(res) > tol * scale)
                    throw PrecisionExhausted(
                        "moment relation residual at (" + std::to_string(m) + "," + std::to_string(n) +
                        "), column " + std::to_string(l) + " exceeds tolerance at " +
                        std::to_string(session_digits()) + " digits");
            }
        }
    }
    return t;
}

}  // namespace oppq
