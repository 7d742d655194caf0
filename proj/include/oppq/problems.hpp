#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oppq/basis.hpp"
#include "oppq/cdr.hpp"
#include "oppq/errors.hpp"
#include "oppq/indexing.hpp"
#include "oppq/mer.hpp"
#include "oppq/real.hpp"
#include "oppq/weight.hpp"

namespace oppq {

/// A fully wired eigenproblem: moment recurrence, missing-moment structure,
/// reference weight, and the admissible energy range.
struct ProblemSpec {
    std::string name;
    int dimension = 1;
    long missing_order = 0;   // 1D only; 2D problems choose it per run
    bool hierarchical = false;
    std::string energy_name = "E";
    bool positive_energy = false;  // energy parameter must stay positive
    std::function<std::vector<RecurrenceTerm>(long)> step;  // 1D recurrence
    Real field;                    // 2D field strength
    WeightSpec weight;
};

/// Even-sector harmonic oscillator -psi'' + x^2 psi = E psi via half-line
/// moments u(p) = integral x^{2p} psi:  u(p+1) = E u(p) + 2p(2p-1) u(p-1),
/// no missing moments beyond u_0.
struct HarmonicSpec {
    ProblemSpec spec() const {
        ProblemSpec p;
        p.name = "harmonic";
        p.dimension = 1;
        p.missing_order = 0;
        p.weight.kind = WeightSpec::Kind::HermiteHalfline;
        p.step = [](long q) {
            std::vector<RecurrenceTerm> terms;
            terms.push_back({q - 1, Real(0), Real(1)});
            if (q >= 2) terms.push_back({q - 2, Real(2 * (q - 1)) * Real(2 * q - 3), Real(0)});
            return terms;
        };
        return p;
    }
};

/// Even-sector double-well quartic -psi'' + (x^4 - 5 x^2) psi = E psi:
/// u(p+2) = 5 u(p+1) + E u(p) + 2p(2p-1) u(p-1), one extra missing moment.
struct QuarticSpec {
    ProblemSpec spec() const {
        ProblemSpec p;
        p.name = "quartic";
        p.dimension = 1;
        p.missing_order = 1;
        p.weight.kind = WeightSpec::Kind::HermiteHalfline;
        p.step = [](long q) {
            std::vector<RecurrenceTerm> terms;
            terms.push_back({q - 1, Real(5), Real(0)});
            terms.push_back({q - 2, Real(0), Real(1)});
            if (q >= 3) terms.push_back({q - 3, Real(2 * (q - 2)) * Real(2 * q - 5), Real(0)});
            return terms;
        };
        return p;
    }
};

/// Hydrogenic ground-symmetry problem in a uniform field, scanned in the
/// binding parameter eps.  The weight's eps0 is frozen (zero means "decide
/// by the low-order probe", see qzm_energy_map).
struct QzmSpec {
    Real field;
    Real eps0 = 0;
    ProblemSpec spec() const {
        if (!(field > 0)) throw ConfigError("field strength must be positive");
        ProblemSpec p;
        p.name = "qzm";
        p.dimension = 2;
        p.hierarchical = true;
        p.energy_name = "epsilon";
        p.positive_energy = true;
        p.field = field;
        p.weight.kind = WeightSpec::Kind::QzmExp;
        p.weight.field = field;
        p.weight.eps0 = eps0;
        return p;
    }
};

/// Validates and finalizes a wired problem.
inline ProblemSpec register_problem(ProblemSpec p) {
    if (p.name.empty()) throw ConfigError("problem needs a name");
    if (p.dimension == 1) {
        if (!p.step) throw ConfigError("1D problem '" + p.name + "' has no recurrence");
        if (p.weight.kind != WeightSpec::Kind::HermiteHalfline)
            throw ConfigError("1D problem '" + p.name + "' needs a 1D weight");
        if (p.missing_order < 0) throw ConfigError("negative missing-moment order");
    } else if (p.dimension == 2) {
        if (!(p.field > 0)) throw ConfigError("2D problem '" + p.name + "' needs a positive field");
        if (p.weight.kind != WeightSpec::Kind::QzmExp)
            throw ConfigError("2D problem '" + p.name + "' needs the 2D exponential weight");
    } else {
        throw ConfigError("unsupported dimension " + std::to_string(p.dimension));
    }
    return p;
}

/// Builds a registered problem from its CLI name and parameter strings.
inline ProblemSpec make_problem(const std::string& name,
                                const std::map<std::string, std::string>& params) {
    auto get = [&](const char* key) -> Real {
        auto it = params.find(key);
        if (it == params.end()) throw ConfigError("problem '" + name + "' needs --param " +
                                                  std::string(key) + "=...");
        return parse_real(it->second);
    };
    if (name == "harmonic") return register_problem(HarmonicSpec{}.spec());
    if (name == "quartic") return register_problem(QuarticSpec{}.spec());
    if (name == "qzm") {
        QzmSpec q;
        q.field = get("B");
        if (auto it = params.find("eps0"); it != params.end()) q.eps0 = parse_real(it->second);
        return register_problem(q.spec());
    }
    throw ConfigError("unknown problem '" + name + "' (known: harmonic, quartic, qzm)");
}

/// Moment table for a problem at one energy.  For 2D problems max_index is
/// the monomial degree bound 2*m_s + 1.
inline CoeffTable build_coeff_table(const ProblemSpec& prob, const Real& energy, long max_index,
                                    bool with_derivative = false) {
    if (prob.positive_energy && !(energy > 0))
        throw ConfigError("problem '" + prob.name + "' needs " + prob.energy_name + " > 0, got " +
                          to_exact_string(energy));
    if (prob.dimension == 1)
        return build_coeff_table_1d(prob.step, prob.missing_order, energy, max_index,
                                    with_derivative);
    if (max_index % 2 == 0)
        throw ConfigError("2D moment tables cover odd degree bounds (2*m_s + 1)");
    return generate_qzm_moments(prob.field, energy, (max_index - 1) / 2, with_derivative);
}

/// Same table with the energy-derivative columns filled in.
inline CoeffTable build_derivative_table(const ProblemSpec& prob, const Real& energy,
                                         long max_index) {
    return build_coeff_table(prob, energy, max_index, true);
}

/// Basis for a problem at expansion order `order` (2D: order must be the
/// coverage cap of some missing-moment level).
inline BasisTable build_problem_basis(const ProblemSpec& prob, long order) {
    if (prob.dimension == 1) return build_basis(prob.weight, order);
    const long ms = missing_order_for(order);
    if (order_cap(ms) != order)
        throw ConfigError("2D expansion order " + std::to_string(order) +
                          " is not a coverage cap; nearest is " + std::to_string(order_cap(ms)));
    if (!(prob.weight.eps0 > 0))
        throw ConfigError("2D basis needs the frozen weight parameter eps0 set");
    return build_basis(prob.weight, order, 2 * ms + 1);
}

enum class FunctionalKind { SmallestEigen, ConstrainedMin };

inline FunctionalKind default_functional(const ProblemSpec& prob) {
    return prob.dimension == 1 ? FunctionalKind::SmallestEigen : FunctionalKind::ConstrainedMin;
}

/// Callable functional of the energy at a fixed expansion order, memoizing
/// exact-match energies.  The basis must cover the order and outlive the
/// evaluator.
class Evaluator {
  public:
    Evaluator(const ProblemSpec& prob, const BasisTable& basis, long order, FunctionalKind kind,
              bool with_derivative = false)
        : prob_(&prob), basis_(&basis), order_(order), kind_(kind), deriv_(with_derivative) {
        if (order < 0) throw ConfigError("negative expansion order");
        if (order > basis.n_max)
            throw CoverageError("basis covers orders up to " + std::to_string(basis.n_max));
        if (prob.dimension == 2) {
            ms_ = missing_order_for(order);
            if (order_cap(ms_) != order)
                throw ConfigError("2D expansion order " + std::to_string(order) +
                                  " is not a coverage cap");
        }
    }

    long order() const { return order_; }

    const EnergyFunctional& operator()(const Real& energy) const {
        if (prob_->dimension == 2 && energy < prob_->weight.eps0)
            throw ConfigError("scan energy " + to_exact_string(energy) +
                              " lies below the frozen weight parameter " +
                              to_exact_string(prob_->weight.eps0));
        const std::string key = to_exact_string(energy);
        auto it = memo_.find(key);
        if (it != memo_.end() && (!deriv_ || it->second.derivative)) return it->second;
        const long max_index = prob_->dimension == 1 ? order_ : 2 * ms_ + 1;
        const CoeffTable table = build_coeff_table(*prob_, energy, max_index, deriv_);
        const LambdaTable lt = lambda_vectors(*basis_, table, order_, deriv_);
        const PMatrix pm = p_matrix(lt, deriv_);
        EnergyFunctional f =
            kind_ == FunctionalKind::SmallestEigen ? lambda_min(pm) : cqfm_value(pm);
        if (memo_.size() > 4096) memo_.clear();
        return memo_[key] = std::move(f);
    }

    /// Plain value view, for the search drivers.
    std::function<Real(const Real&)> value_fn() const {
        return [this](const Real& e) { return (*this)(e).value; };
    }
    std::function<Real(const Real&)> derivative_fn() const {
        if (!deriv_) throw ConfigError("evaluator was built without derivatives");
        return [this](const Real& e) { return *(*this)(e).derivative; };
    }

  private:
    const ProblemSpec* prob_;
    const BasisTable* basis_;
    long order_;
    long ms_ = 0;
    FunctionalKind kind_;
    bool deriv_;
    mutable std::map<std::string, EnergyFunctional> memo_;
};

/// Projection-zero callable for the root-based (non-bounding) variant:
/// m_s = 0 problems use c_I(E); m_s = 1 problems the 2x2 determinant of the
/// last two projection vectors.
inline std::function<Real(const Real&)> make_projection_zero_fn(const ProblemSpec& prob,
                                                                const BasisTable& basis,
                                                                long order) {
    if (prob.dimension != 1 || prob.missing_order > 1)
        throw ConfigError("projection-zero roots cover 1D problems with at most one extra "
                          "missing moment");
    if (order > basis.n_max || (prob.missing_order == 1 && order < 1))
        throw CoverageError("order " + std::to_string(order) + " outside basis coverage");
    return [&prob, &basis, order](const Real& energy) -> Real {
        const CoeffTable table = build_coeff_table(prob, energy, order, false);
        const LambdaTable lt = lambda_vectors(basis, table, order, false);
        const Vec& last = lt.vectors[static_cast<size_t>(order)];
        if (prob.missing_order == 0) return last[0];
        const Vec& prev = lt.vectors[static_cast<size_t>(order - 1)];
        return last[0] * prev[1] - last[1] * prev[0];
    };
}

/// Frozen-weight policy for the 2D field problem: when eps0 is not supplied,
/// a cheap low-order probe with the binding parameter *inside* the weight
/// locates the minimum's first significant figure, which then freezes the
/// weight for all production orders.  Scans must stay above eps0.
struct QzmEnergyMap {
    Real eps0;
    Real window_lo;
    Real window_hi;
    Real probe_minimum;  // probe-grid minimum (zero when eps0 was supplied)
};

inline Real first_significant_figure(const Real& x) {
    if (!(x > 0)) throw ConfigError("first significant figure of a nonpositive value");
    const long e = static_cast<long>(floor(log10(x)));
    const Real scale = pow(Real(10), e);
    Real d = floor(x / scale);
    if (d < 1) d = 1;
    if (d > 9) d = 9;
    return d * scale;
}

inline QzmEnergyMap qzm_energy_map(const Real& field, const Real& window_lo, const Real& window_hi,
                                   const Real& requested_eps0, long probe_order = 2,
                                   int probe_points = 48) {
    if (!(window_lo < window_hi)) throw ConfigError("empty energy window");
    QzmEnergyMap map;
    map.probe_minimum = 0;
    if (requested_eps0 > 0) {
        map.eps0 = requested_eps0;
    } else {
        Real best_e(0), best_v(0);
        bool have = false;
        std::vector<Real> vals(static_cast<size_t>(probe_points) + 1), es(vals.size());
        for (int k = 0; k <= probe_points; ++k) {
            const Real eps = window_lo + (window_hi - window_lo) * k / probe_points;
            es[static_cast<size_t>(k)] = eps;
            if (!(eps > 0)) throw ConfigError("probe window reaches nonpositive energies");
            QzmSpec probe{field, eps};
            const ProblemSpec prob = register_problem(probe.spec());
            const BasisTable basis = build_problem_basis(prob, order_cap(probe_order));
            const Evaluator eval(prob, basis, order_cap(probe_order),
                                 FunctionalKind::ConstrainedMin);
            vals[static_cast<size_t>(k)] = eval(eps).value;
        }
        for (int k = 1; k < probe_points; ++k) {
            const size_t i = static_cast<size_t>(k);
            if (vals[i] < vals[i - 1] && vals[i] <= vals[i + 1] && (!have || vals[i] < best_v)) {
                best_e = es[i];
                best_v = vals[i];
                have = true;
            }
        }
        if (!have)
            throw NoMinimumFound("frozen-parameter probe found no interior minimum in [" +
                                 to_exact_string(window_lo) + ", " + to_exact_string(window_hi) +
                                 "]");
        map.eps0 = first_significant_figure(best_e);
        map.probe_minimum = best_e;
    }
    map.window_lo = window_lo > map.eps0 ? window_lo : map.eps0 * (1 + pow(Real(10), -12));
    map.window_hi = window_hi;
    if (!(map.window_lo < map.window_hi))
        throw ConfigError("energy window collapses after enforcing the frozen-parameter floor");
    return map;
}

}  // namespace oppq
