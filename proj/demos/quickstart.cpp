// Minimal library walkthrough: converging two-sided bounds for the second
// even level of the harmonic oscillator (exact value 5).

#include <iostream>

#include "oppq/oppq.hpp"

int main() {
    using namespace oppq;
    PrecisionScope scope(40);

    const ProblemSpec prob = register_problem(HarmonicSpec{}.spec());
    const std::vector<long> orders{6, 8, 10, 12};
    const BasisTable basis = build_problem_basis(prob, orders.back());

    std::vector<std::unique_ptr<Evaluator>> keep;
    auto fn_for = [&](long order) {
        keep.push_back(std::make_unique<Evaluator>(prob, basis, order,
                                                   FunctionalKind::SmallestEigen));
        Evaluator* ev = keep.back().get();
        return EnergyFn([ev](const Real& e) { return (*ev)(e).value; });
    };

    const Real lo(3), hi(7);
    const auto seq = minima_sequence(fn_for, orders, lo, hi);
    const Real cap = choose_cap(seq.back().value);

    std::cout << "order  minimum           lower             upper\n";
    std::cout.precision(12);
    for (size_t i = 0; i < seq.size(); ++i) {
        const auto rec = bracket_bounds(fn_for(seq[i].order), seq[i].order,
                                        Minimum{seq[i].energy, seq[i].value}, cap, lo, hi);
        std::cout << seq[i].order << "      " << rec.min_energy << "   " << rec.lower << "   "
                  << rec.upper << "\n";
    }
    return 0;
}
