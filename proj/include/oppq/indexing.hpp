#pragma once

#include <utility>
#include <vector>

#include "oppq/errors.hpp"

namespace oppq {

/// Two-dimensional monomials xi^m eta^n enumerated antidiagonal by
/// antidiagonal, with m descending inside each antidiagonal:
///   (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
/// This is the column/monomial ordering used everywhere a 2D polynomial or
/// Gram matrix appears.
struct Monomial2D {
    long m = 0;
    long n = 0;
};

inline long monomial_index(long m, long n) {
    const long d = m + n;
    return d * (d + 1) / 2 + n;
}

inline Monomial2D monomial_at(long index) {
    long d = 0;
    while ((d + 1) * (d + 2) / 2 <= index) ++d;
    const long n = index - d * (d + 1) / 2;
    return {d - n, n};
}

/// Number of monomials with m + n <= degree.
inline long monomial_count(long degree) {
    return (degree + 1) * (degree + 2) / 2;
}

/// Highest usable expansion order for a hierarchical 2D problem with
/// missing-moment order m_s: every monomial of total degree <= 2*m_s + 1 is
/// then covered, and the order equals the last such monomial's index.
inline long order_cap(long missing_order) {
    return (missing_order + 1) * (2 * missing_order + 3) - 1;
}

/// Smallest missing-moment order whose coverage includes expansion order I.
inline long missing_order_for(long order) {
    long ms = 0;
    while (order_cap(ms) < order) ++ms;
    return ms;
}

/// Flat storage for symmetric 2D moment tables u(m,n) = u(n,m): only
/// canonical pairs m <= n are stored, enumerated antidiagonal by
/// antidiagonal with m ascending inside each one.
class SymmetricPairIndex {
  public:
    explicit SymmetricPairIndex(long max_degree) : max_degree_(max_degree) {
        offsets_.reserve(static_cast<size_t>(max_degree) + 2);
        long running = 0;
        for (long d = 0; d <= max_degree; ++d) {
            offsets_.push_back(running);
            running += d / 2 + 1;
        }
        offsets_.push_back(running);
    }

    long max_degree() const { return max_degree_; }
    long size() const { return offsets_.back(); }

    long flat(long m, long n) const {
        if (m > n) std::swap(m, n);
        const long d = m + n;
        if (m < 0 || d > max_degree_)
            throw CoverageError("moment index (" + std::to_string(m) + "," +
                                std::to_string(n) + ") outside generated range");
        return offsets_[static_cast<size_t>(d)] + m;
    }

    /// Canonical (m, n) with m <= n for a flat position.
    Monomial2D pair_at(long flat_index) const {
        long d = 0;
        while (offsets_[static_cast<size_t>(d) + 1] <= flat_index) ++d;
        const long m = flat_index - offsets_[static_cast<size_t>(d)];
        return {m, d - m};
    }

  private:
    long max_degree_;
    std::vector<long> offsets_;
};

}  // namespace oppq
