#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "oppq/errors.hpp"
#include "oppq/real.hpp"

namespace oppq {

using EnergyFn = std::function<Real(const Real&)>;

struct Minimum {
    Real energy;
    Real value;
};

struct MinimaScan {
    std::vector<Minimum> minima;  // sorted by energy
    bool left_edge = false;       // functional still decreasing into the left edge
    bool right_edge = false;      // ... or into the right edge
};

namespace detail {

/// Golden-section refinement of a bracketed minimum on [a, b].
inline Minimum golden_refine(const EnergyFn& fn, Real a, Real b, const Real& rel_tol) {
    static const Real invphi = (sqrt(Real(5)) - 1) / 2;
    static const Real invphi2 = (3 - sqrt(Real(5))) / 2;
    const Real tol = rel_tol * (1 + (abs(a) > abs(b) ? abs(a) : abs(b)));
    Real h = b - a;
    Real c = a + invphi2 * h, d = a + invphi * h;
    Real fc = fn(c), fd = fn(d);
    for (int it = 0; it < 2000 && h > tol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            h = b - a;
            c = a + invphi2 * h;
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            h = b - a;
            d = a + invphi * h;
            fd = fn(d);
        }
    }
    return fc < fd ? Minimum{c, fc} : Minimum{d, fd};
}

}  // namespace detail

/// Grid scan plus golden-section refinement of every interior local minimum
/// of `fn` on [lo, hi].  grid_step <= 0 picks (hi - lo) / 200.
inline MinimaScan find_local_minima(const EnergyFn& fn, const Real& lo, const Real& hi,
                                    Real grid_step = 0, const Real& rel_tol = Real("1e-12")) {
    if (!(lo < hi)) throw ConfigError("empty scan window");
    if (!(grid_step > 0)) grid_step = (hi - lo) / 200;
    long n = static_cast<long>(ceil((hi - lo) / grid_step));
    if (n < 8) n = 8;
    std::vector<Real> e(static_cast<size_t>(n) + 1), f(e.size());
    for (long k = 0; k <= n; ++k) {
        e[static_cast<size_t>(k)] = lo + (hi - lo) * k / n;
        f[static_cast<size_t>(k)] = fn(e[static_cast<size_t>(k)]);
    }
    MinimaScan scan;
    scan.left_edge = f[0] < f[1];
    scan.right_edge = f[static_cast<size_t>(n)] < f[static_cast<size_t>(n) - 1];
    for (long k = 1; k < n; ++k) {
        const size_t i = static_cast<size_t>(k);
        const bool dip = (f[i] < f[i - 1] && f[i] <= f[i + 1]) ||
                         (f[i] <= f[i - 1] && f[i] < f[i + 1]);
        if (!dip) continue;
        Minimum m = detail::golden_refine(fn, e[i - 1], e[i + 1], rel_tol);
        if (!scan.minima.empty() &&
            abs(m.energy - scan.minima.back().energy) < (hi - lo) / (2 * n)) {
            if (m.value < scan.minima.back().value) scan.minima.back() = m;
            continue;
        }
        scan.minima.push_back(m);
    }
    return scan;
}

struct SequencePoint {
    long order;
    Real energy;
    Real value;
    bool monotone_up = true;   // value did not drop below the previous order's
    bool used_fallback = false;  // tracked window missed; rescanned the full window
};

/// One step of the order-by-order state tracker.  With no previous point the
/// deepest minimum in the window is taken; afterwards the scan is restricted
/// to a window around the previous energy (ten grid cells each side, halved
/// step), falling back to the full window when that misses, and the minimum
/// nearest the previous energy is selected.
inline SequencePoint next_sequence_point(const EnergyFn& fn, long order, const SequencePoint* prev,
                                         const Real& lo, const Real& hi, Real grid_step = 0,
                                         const Real& rel_tol = Real("1e-12")) {
    const Real step = grid_step > 0 ? grid_step : (hi - lo) / 200;
    SequencePoint pt;
    pt.order = order;
    if (!prev) {
        const MinimaScan scan = find_local_minima(fn, lo, hi, step, rel_tol);
        if (scan.minima.empty())
            throw NoMinimumFound("no local minimum in the window at order " +
                                 std::to_string(order));
        size_t best = 0;
        for (size_t i = 1; i < scan.minima.size(); ++i)
            if (scan.minima[i].value < scan.minima[best].value) best = i;
        pt.energy = scan.minima[best].energy;
        pt.value = scan.minima[best].value;
        return pt;
    }
    Real tlo = prev->energy - 10 * step, thi = prev->energy + 10 * step;
    if (tlo < lo) tlo = lo;
    if (thi > hi) thi = hi;
    MinimaScan scan = tlo < thi ? find_local_minima(fn, tlo, thi, step / 2, rel_tol) : MinimaScan{};
    if (scan.minima.empty()) {
        pt.used_fallback = true;
        scan = find_local_minima(fn, lo, hi, step, rel_tol);
    }
    if (scan.minima.empty())
        throw NoMinimumFound("state lost at order " + std::to_string(order) +
                             ": no local minimum in the window");
    size_t best = 0;
    for (size_t i = 1; i < scan.minima.size(); ++i)
        if (abs(scan.minima[i].energy - prev->energy) < abs(scan.minima[best].energy - prev->energy))
            best = i;
    pt.energy = scan.minima[best].energy;
    pt.value = scan.minima[best].value;
    pt.monotone_up = !(pt.value < prev->value);
    return pt;
}

/// Follows one state's local minimum through increasing expansion orders.
inline std::vector<SequencePoint> minima_sequence(
    const std::function<EnergyFn(long)>& fn_for_order, const std::vector<long>& orders,
    const Real& lo, const Real& hi, Real grid_step = 0, const Real& rel_tol = Real("1e-12")) {
    if (orders.empty()) throw ConfigError("no expansion orders requested");
    std::vector<SequencePoint> seq;
    for (const long order : orders) {
        const SequencePoint* prev = seq.empty() ? nullptr : &seq.back();
        seq.push_back(next_sequence_point(fn_for_order(order), order, prev, lo, hi, grid_step,
                                          rel_tol));
    }
    return seq;
}

/// Level cap for the bounding stage: explicit when given (validated against
/// the highest minimum value), otherwise a relative margin above it.
inline Real choose_cap(const Real& last_minimum_value, const Real& explicit_cap = 0,
                       const Real& margin = Real("0.10")) {
    if (explicit_cap > 0) {
        if (!(explicit_cap > last_minimum_value))
            throw CapBelowMinimum("cap " + to_exact_string(explicit_cap) +
                                  " does not exceed the minimum value " +
                                  to_exact_string(last_minimum_value));
        return explicit_cap;
    }
    if (!(last_minimum_value > 0))
        throw CapBelowMinimum("cannot derive a cap from a nonpositive minimum value");
    return last_minimum_value * (1 + margin);
}

struct BoundRecord {
    long order;
    Real min_energy;
    Real min_value;
    Real cap;
    Real lower;
    Real upper;
};

namespace detail {

/// First crossing of `fn` through `cap` moving from the minimum toward
/// `limit`; bisected to `tol_abs`.
inline Real cap_crossing(const EnergyFn& fn, const Real& from, const Real& limit, const Real& cap,
                         const Real& step0, const Real& tol_abs) {
    const int dir = limit > from ? 1 : -1;
    Real inside = from;   // functional below the cap here
    Real h = step0;
    Real outside;
    bool found = false;
    for (int it = 0; it < 200; ++it) {
        Real cand = from + dir * h;
        if ((dir > 0 && cand > limit) || (dir < 0 && cand < limit)) cand = limit;
        if (fn(cand) >= cap) {
            outside = cand;
            found = true;
            break;
        }
        inside = cand;
        if (cand == limit) break;
        h *= 2;
    }
    if (!found) {
        // Fine sweep between the last inside point and the limit before
        // declaring the level set open on this side.
        for (int j = 1; j <= 32 && !found; ++j) {
            const Real cand = inside + (limit - inside) * j / 32;
            if (fn(cand) >= cap) {
                outside = cand;
                found = true;
            } else {
                inside = cand;
            }
        }
    }
    if (!found)
        throw NeighborCollision("functional stays below the cap between " + to_exact_string(from) +
                                " and " + to_exact_string(limit));
    while (abs(outside - inside) > tol_abs) {
        const Real mid = (outside + inside) / 2;
        if (mid == outside || mid == inside) break;
        if (fn(mid) >= cap)
            outside = mid;
        else
            inside = mid;
    }
    return (outside + inside) / 2;
}

}  // namespace detail

/// Bisected edges of the cap level set around one minimum: the returned
/// [lower, upper] interval brackets the limiting energy.  `lo_limit` and
/// `hi_limit` confine the search (window edges or neighbor minima).
inline BoundRecord bracket_bounds(const EnergyFn& fn, long order, const Minimum& minimum,
                                  const Real& cap, const Real& lo_limit, const Real& hi_limit,
                                  Real step0 = 0) {
    if (!(minimum.value < cap))
        throw CapBelowMinimum("minimum value " + to_exact_string(minimum.value) +
                              " is not below the cap " + to_exact_string(cap));
    if (!(lo_limit < minimum.energy) || !(minimum.energy < hi_limit))
        throw ConfigError("minimum lies outside the bracketing limits");
    if (!(step0 > 0)) step0 = (hi_limit - lo_limit) / 256;
    const long digits = static_cast<long>(session_digits());
    const long bdig = digits / 2 < 30 ? digits / 2 : 30;
    const Real tol_abs = pow(Real(10), -bdig) * (1 + abs(minimum.energy));
    BoundRecord rec;
    rec.order = order;
    rec.min_energy = minimum.energy;
    rec.min_value = minimum.value;
    rec.cap = cap;
    rec.lower = detail::cap_crossing(fn, minimum.energy, lo_limit, cap, step0, tol_abs);
    rec.upper = detail::cap_crossing(fn, minimum.energy, hi_limit, cap, step0, tol_abs);
    return rec;
}

struct RootScan {
    std::vector<Real> roots;  // sign-change roots, sorted
    int discarded = 0;        // near-zero dips without a sign change
};

/// Sign-change roots of a smooth function on [lo, hi] by grid + bisection.
/// Grid dips toward zero without a sign change are counted as discarded
/// (they index root pairs that left the real axis).
inline RootScan find_real_roots(const EnergyFn& fn, const Real& lo, const Real& hi,
                                long n_grid = 400, const Real& rel_tol = Real("1e-30")) {
    if (!(lo < hi)) throw ConfigError("empty root window");
    if (n_grid < 8) n_grid = 8;
    std::vector<Real> e(static_cast<size_t>(n_grid) + 1), f(e.size());
    Real scale(0);
    for (long k = 0; k <= n_grid; ++k) {
        e[static_cast<size_t>(k)] = lo + (hi - lo) * k / n_grid;
        f[static_cast<size_t>(k)] = fn(e[static_cast<size_t>(k)]);
        if (abs(f[static_cast<size_t>(k)]) > scale) scale = abs(f[static_cast<size_t>(k)]);
    }
    RootScan out;
    const Real near_zero = scale * Real("1e-8");
    for (long k = 0; k < n_grid; ++k) {
        const size_t i = static_cast<size_t>(k);
        if (f[i] == 0) {
            out.roots.push_back(e[i]);
            continue;
        }
        if (f[i + 1] != 0 && (f[i] < 0) != (f[i + 1] < 0)) {
            Real a = e[i], b = e[i + 1], fa = f[i];
            const Real tol = rel_tol * (1 + abs(a) + abs(b));
            while (b - a > tol) {
                const Real mid = (a + b) / 2;
                if (mid == a || mid == b) break;
                const Real fm = fn(mid);
                if (fm == 0) {
                    a = b = mid;
                    break;
                }
                if ((fm < 0) == (fa < 0)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            out.roots.push_back((a + b) / 2);
        } else if (k >= 1) {
            // interior dip of |f| below the noise floor without a crossing
            const size_t p = i - 1;
            if (abs(f[i]) < near_zero && abs(f[i]) < abs(f[p]) && abs(f[i]) < abs(f[i + 1]))
                ++out.discarded;
        }
    }
    if (f[static_cast<size_t>(n_grid)] == 0) out.roots.push_back(e[static_cast<size_t>(n_grid)]);
    return out;
}

}  // namespace oppq
