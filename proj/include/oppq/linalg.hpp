#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "oppq/errors.hpp"
#include "oppq/real.hpp"

namespace oppq {

using Vec = std::vector<Real>;

/// Dense row-major matrix over the MP scalar.  Sized for the small systems
/// this library meets (moment solves of a few dozen rows, Gram matrices up
/// to a couple of thousand); no attempt at blocking or expression fusion.
class Mat {
  public:
    Mat() = default;
    Mat(long rows, long cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows * cols), Real(0)) {}

    long rows() const { return rows_; }
    long cols() const { return cols_; }

    Real& operator()(long i, long j) { return a_[static_cast<size_t>(i * cols_ + j)]; }
    const Real& operator()(long i, long j) const { return a_[static_cast<size_t>(i * cols_ + j)]; }

    static Mat identity(long n) {
        Mat m(n, n);
        for (long i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

  private:
    long rows_ = 0;
    long cols_ = 0;
    std::vector<Real> a_;
};

inline Real dot(const Vec& x, const Vec& y) {
    Real s(0);
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline Real norm2(const Vec& x) { return sqrt(dot(x, x)); }

inline Vec matvec(const Mat& a, const Vec& x) {
    Vec y(static_cast<size_t>(a.rows()), Real(0));
    for (long i = 0; i < a.rows(); ++i) {
        Real s(0);
        for (long j = 0; j < a.cols(); ++j) s += a(i, j) * x[static_cast<size_t>(j)];
        y[static_cast<size_t>(i)] = s;
    }
    return y;
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
/// Throws CholeskyNotPD naming the failing pivot; never regularizes.
inline Mat cholesky_lower(const Mat& a) {
    const long n = a.rows();
    Mat l(n, n);
    for (long j = 0; j < n; ++j) {
        Real d = a(j, j);
        for (long k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0)
            throw CholeskyNotPD("Cholesky pivot " + std::to_string(j) +
                                " not positive; raise the working precision");
        const Real ljj = sqrt(d);
        l(j, j) = ljj;
        for (long i = j + 1; i < n; ++i) {
            Real s = a(i, j);
            for (long k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

/// Solves L y = b for lower-triangular L.
inline Vec solve_lower(const Mat& l, const Vec& b) {
    const long n = l.rows();
    Vec y(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
        Real s = b[static_cast<size_t>(i)];
        for (long j = 0; j < i; ++j) s -= l(i, j) * y[static_cast<size_t>(j)];
        y[static_cast<size_t>(i)] = s / l(i, i);
    }
    return y;
}

/// Solves L^T x = y for lower-triangular L.
inline Vec solve_lower_transposed(const Mat& l, const Vec& y) {
    const long n = l.rows();
    Vec x(static_cast<size_t>(n));
    for (long i = n - 1; i >= 0; --i) {
        Real s = y[static_cast<size_t>(i)];
        for (long j = i + 1; j < n; ++j) s -= l(j, i) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(i)] = s / l(i, i);
    }
    return x;
}

/// Solves A x = b through an existing Cholesky factor L (A = L L^T).
inline Vec cholesky_solve(const Mat& l, const Vec& b) {
    return solve_lower_transposed(l, solve_lower(l, b));
}

/// Partial-pivot LU factorization, factors stored in place.
struct Lu {
    Mat lu;
    std::vector<long> perm;
};

inline Lu lu_factor(Mat a) {
    const long n = a.rows();
    std::vector<long> perm(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    for (long k = 0; k < n; ++k) {
        long piv = k;
        Real best = abs(a(k, k));
        for (long i = k + 1; i < n; ++i) {
            const Real v = abs(a(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best == 0)
            throw LinearSolveSingular("LU pivot column " + std::to_string(k) +
                                      " vanished: system has no unique solution");
        if (piv != k) {
            for (long j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(perm[static_cast<size_t>(k)], perm[static_cast<size_t>(piv)]);
        }
        for (long i = k + 1; i < n; ++i) {
            const Real m = a(i, k) / a(k, k);
            a(i, k) = m;
            for (long j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
        }
    }
    return {std::move(a), std::move(perm)};
}

inline Vec lu_solve(const Lu& f, const Vec& b) {
    const long n = f.lu.rows();
    Vec y(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
        Real s = b[static_cast<size_t>(f.perm[static_cast<size_t>(i)])];
        for (long j = 0; j < i; ++j) s -= f.lu(i, j) * y[static_cast<size_t>(j)];
        y[static_cast<size_t>(i)] = s;
    }
    Vec x(static_cast<size_t>(n));
    for (long i = n - 1; i >= 0; --i) {
        Real s = y[static_cast<size_t>(i)];
        for (long j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(i)] = s / f.lu(i, i);
    }
    return x;
}

}  // namespace oppq
