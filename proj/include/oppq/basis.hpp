#pragma once

#include <string>
#include <vector>

#include "oppq/errors.hpp"
#include "oppq/indexing.hpp"
#include "oppq/linalg.hpp"
#include "oppq/real.hpp"
#include "oppq/weight.hpp"

namespace oppq {

/// Orthonormal polynomial family of a weight, in monomial coordinates.
/// xi[I] holds the I+1 monomial coefficients of the degree/index-I member
/// (1D: powers 0..I; 2D: antidiagonal monomial ordering).  Leading
/// coefficients are positive.  The Gram matrix of the monomials is retained
/// for diagnostics and residual tests.
struct BasisTable {
    WeightSpec weight;
    int dimension = 1;
    int digits = 0;
    long n_max = 0;       // highest polynomial index
    long max_degree = 0;  // 2D: largest monomial total degree; 1D: == n_max
    std::vector<Vec> xi;
    Mat gram;
    std::vector<Real> moments1d;  // 1D weight moments w(0 .. 2 n_max)
    Mat moments2d;                // 2D weight moment rectangle

    std::string signature() const {
        return weight.signature() + ";n=" + std::to_string(n_max) +
               ";digits=" + std::to_string(digits);
    }
};

namespace detail {

/// Columns of the inverse transposed Cholesky factor, computed one index at
/// a time by back-substitution: C^T x = e_I involves only the leading
/// (I+1) x (I+1) block, so xi[I] naturally has I+1 entries.
inline std::vector<Vec> xi_from_cholesky(const Mat& chol) {
    const long n = chol.rows();
    std::vector<Vec> xi(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
        Vec x(static_cast<size_t>(i) + 1);
        x[static_cast<size_t>(i)] = 1 / chol(i, i);
        for (long j = i - 1; j >= 0; --j) {
            Real s(0);
            for (long k = j + 1; k <= i; ++k) s += chol(k, j) * x[static_cast<size_t>(k)];
            x[static_cast<size_t>(j)] = -s / chol(j, j);
        }
        xi[static_cast<size_t>(i)] = std::move(x);
    }
    return xi;
}

/// Backward-error orthonormality residual of entry (i, j) against the
/// original Gram matrix: |<xi_i|W|xi_j> - delta_ij| measured relative to the
/// magnitude of the accumulated terms.
inline void check_orthonormal_entry(const BasisTable& b, long i, long j) {
    Real acc(0), scale(0);
    const Vec& xi_i = b.xi[static_cast<size_t>(i)];
    const Vec& xi_j = b.xi[static_cast<size_t>(j)];
    for (size_t p = 0; p < xi_i.size(); ++p) {
        Real inner(0), inner_scale(0);
        for (size_t q = 0; q < xi_j.size(); ++q) {
            const Real t = b.gram(static_cast<long>(p), static_cast<long>(q)) * xi_j[q];
            inner += t;
            inner_scale += abs(t);
        }
        acc += xi_i[p] * inner;
        scale += abs(xi_i[p]) * inner_scale;
    }
    const Real expected = (i == j) ? Real(1) : Real(0);
    if (abs(acc - expected) > residual_tolerance() * (scale + 1))
        throw PrecisionExhausted("orthonormality residual (" + std::to_string(i) + "," +
                                 std::to_string(j) + ") exceeds tolerance at " +
                                 std::to_string(session_digits()) + " digits");
}

}  // namespace detail

/// Builds the orthonormal basis of `weight` up to polynomial index n_max by
/// Cholesky factorization of the monomial Gram matrix.  For 2D weights the
/// basis spans every monomial with total degree <= max_degree, so n_max
/// must equal monomial_count(max_degree) - 1.
inline BasisTable build_basis(const WeightSpec& weight, long n_max, long max_degree_2d = -1) {
    BasisTable b;
    b.weight = weight;
    b.digits = session_digits();
    b.n_max = n_max;

    if (weight.kind == WeightSpec::Kind::HermiteHalfline) {
        b.dimension = 1;
        b.max_degree = n_max;
        b.moments1d = weight_moments_1d(weight, 2 * n_max);
        b.gram = Mat(n_max + 1, n_max + 1);
        for (long i = 0; i <= n_max; ++i)
            for (long j = 0; j <= n_max; ++j) b.gram(i, j) = b.moments1d[static_cast<size_t>(i + j)];
    } else {
        b.dimension = 2;
        if (max_degree_2d < 0) throw ConfigError("2D basis needs its monomial degree bound");
        b.max_degree = max_degree_2d;
        const long count = monomial_count(max_degree_2d);
        if (n_max != count - 1)
            throw ConfigError("2D basis order " + std::to_string(n_max) +
                              " does not cover monomial degree " + std::to_string(max_degree_2d) +
                              " (expected order " + std::to_string(count - 1) + ")");
        b.moments2d = qzm_weight_moments(weight, 2 * max_degree_2d);
        b.gram = Mat(count, count);
        for (long i = 0; i < count; ++i) {
            const Monomial2D mi = monomial_at(i);
            for (long j = i; j < count; ++j) {
                const Monomial2D mj = monomial_at(j);
                const Real& v = b.moments2d(mi.m + mj.m, mi.n + mj.n);
                b.gram(i, j) = v;
                b.gram(j, i) = v;
            }
        }
    }

    const Mat chol = cholesky_lower(b.gram);
    b.xi = detail::xi_from_cholesky(chol);

    // Sampled self-check against the Gram matrix (tests do exhaustive
    // versions at small orders; a full n^4 sweep is pointless here).
    std::vector<long> picks{0, n_max / 4, n_max / 2, (3 * n_max) / 4, n_max};
    for (long i : picks) detail::check_orthonormal_entry(b, i, i);
    if (n_max >= 1) {
        detail::check_orthonormal_entry(b, n_max, n_max - 1);
        detail::check_orthonormal_entry(b, 0, n_max);
    }
    return b;
}

}  // namespace oppq
