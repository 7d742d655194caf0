#include "catch_amalgamated.hpp"

#include "oppq/mer.hpp"
#include "oppq/problems.hpp"
#include "oppq/real.hpp"

using namespace oppq;

namespace {

// Independent residual of one 2D moment relation instance, column ell:
//   m^2 u(m-1,n) + n^2 u(m,n-1) - (Bm+eps)/2 u(m,n+1) - (Bn+eps)/2 u(m+1,n)
//     + u(m,n) = 0
// returned relative to the largest participating term.
Real relation_residual(const CoeffTable& t, const Real& B, const Real& eps, long m, long n,
                       long ell, bool derivative) {
    const Real half = Real(1) / 2;
    Real res(0), scale(0);
    auto u = [&](long a, long b) { return derivative ? t.dm2(a, b, ell) : t.m2(a, b, ell); };
    auto acc = [&](const Real& c, long a, long b) {
        const Real term = c * u(a, b);
        res += term;
        scale += abs(term);
    };
    if (m >= 1) acc(Real(m * m), m - 1, n);
    if (n >= 1) acc(Real(n * n), m, n - 1);
    acc(-half * (B * m + eps), m, n + 1);
    acc(-half * (B * n + eps), m + 1, n);
    acc(Real(1), m, n);
    if (derivative) {
        // extra inhomogeneity from d/d eps of the forward coefficients
        const Real t1 = -half * t.m2(m, n + 1, ell);
        const Real t2 = -half * t.m2(m + 1, n, ell);
        res += t1 + t2;
        scale += abs(t1) + abs(t2);
    }
    return scale > 0 ? Real(abs(res) / scale) : Real(abs(res));
}

}  // namespace

TEST_CASE("harmonic moment table matches hand expansion") {
    PrecisionScope scope(50);
    const ProblemSpec prob = register_problem(HarmonicSpec{}.spec());
    const Real E(1);
    const CoeffTable t = build_coeff_table(prob, E, 4, true);
    REQUIRE(t.m(0, 0) == 1);
    REQUIRE(t.m(1, 0) == E);
    REQUIRE(t.m(2, 0) == 3);   // E^2 + 2 at E = 1
    REQUIRE(t.m(3, 0) == 15);  // E^3 + 14 E at E = 1
    REQUIRE(t.dm(0, 0) == 0);
    REQUIRE(t.dm(1, 0) == 1);
    REQUIRE(t.dm(2, 0) == 2);   // 2 E
    REQUIRE(t.dm(3, 0) == 17);  // 3 E^2 + 14
}

TEST_CASE("quartic double-well table carries two missing-moment columns") {
    PrecisionScope scope(50);
    const ProblemSpec prob = register_problem(QuarticSpec{}.spec());
    const Real E = parse_real("1.3");
    const CoeffTable t = build_coeff_table(prob, E, 3, true);
    REQUIRE(t.width() == 2);
    // free moments
    REQUIRE(t.m(0, 0) == 1);
    REQUIRE(t.m(0, 1) == 0);
    REQUIRE(t.m(1, 0) == 0);
    REQUIRE(t.m(1, 1) == 1);
    // u(2) = (E, 5), u(3) = (5E + 2, 25 + E)
    REQUIRE(t.m(2, 0) == E);
    REQUIRE(t.m(2, 1) == 5);
    REQUIRE(t.m(3, 0) == 5 * E + 2);
    REQUIRE(t.m(3, 1) == 25 + E);
    // d/dE: u'(2) = (1, 0), u'(3) = (5, 1)
    REQUIRE(t.dm(2, 0) == 1);
    REQUIRE(t.dm(2, 1) == 0);
    REQUIRE(t.dm(3, 0) == 5);
    REQUIRE(t.dm(3, 1) == 1);
}

TEST_CASE("1D energy derivative matches central differences at second order") {
    PrecisionScope scope(60);
    const ProblemSpec prob = register_problem(QuarticSpec{}.spec());
    const Real E = parse_real("0.7");
    const long q_max = 8;
    const CoeffTable base = build_coeff_table(prob, E, q_max, true);

    std::vector<Real> errors;
    for (int k = 5; k <= 7; ++k) {
        const Real h = pow(Real(10), -k);
        const CoeffTable plus = build_coeff_table(prob, E + h, q_max, false);
        const CoeffTable minus = build_coeff_table(prob, E - h, q_max, false);
        Real worst(0);
        for (long q = 0; q <= q_max; ++q)
            for (long l = 0; l < base.width(); ++l) {
                const Real fd = (plus.m(q, l) - minus.m(q, l)) / (2 * h);
                const Real err = abs(fd - base.dm(q, l));
                if (err > worst) worst = err;
            }
        errors.push_back(worst);
    }
    // second-order stencil: error shrinks ~100x per decade of h
    for (size_t i = 1; i < errors.size(); ++i) {
        const Real ratio = errors[i - 1] / errors[i];
        REQUIRE(ratio > 25);
        REQUIRE(ratio < 400);
    }
    REQUIRE(errors.back() < pow(Real(10), -10));
}

TEST_CASE("2D table satisfies the moment relations independently") {
    PrecisionScope scope(60);
    const Real tol = pow(Real(10), -45);
    struct Case {
        const char* B;
        const char* eps;
        long ms;
    };
    for (const Case c : {Case{"2", "1.0", 2}, Case{"0.2", "0.59", 4}}) {
        const Real B = parse_real(c.B), eps = parse_real(c.eps);
        const CoeffTable t = generate_qzm_moments(B, eps, c.ms, true);
        for (long d = 0; d <= 2 * c.ms; ++d)
            for (long m = 0; 2 * m <= d; ++m)
                for (long l = 0; l <= c.ms; ++l) {
                    REQUIRE(relation_residual(t, B, eps, m, d - m, l, false) < tol);
                    REQUIRE(relation_residual(t, B, eps, m, d - m, l, true) < tol);
                }
    }
}

TEST_CASE("2D derivative columns match central differences at second order") {
    PrecisionScope scope(60);
    const Real B = parse_real("2");
    const Real eps = parse_real("1.0");
    const long ms = 3;
    const CoeffTable base = generate_qzm_moments(B, eps, ms, true);

    std::vector<Real> errors;
    for (int k = 5; k <= 7; ++k) {
        const Real h = pow(Real(10), -k);
        const CoeffTable plus = generate_qzm_moments(B, eps + h, ms, false);
        const CoeffTable minus = generate_qzm_moments(B, eps - h, ms, false);
        Real worst(0);
        for (long d = 0; d <= 2 * ms + 1; ++d)
            for (long m = 0; 2 * m <= d; ++m)
                for (long l = 0; l <= ms; ++l) {
                    const Real fd =
                        (plus.m2(m, d - m, l) - minus.m2(m, d - m, l)) / (2 * h);
                    const Real err = abs(fd - base.dm2(m, d - m, l));
                    if (err > worst) worst = err;
                }
        errors.push_back(worst);
    }
    for (size_t i = 1; i < errors.size(); ++i) {
        const Real ratio = errors[i - 1] / errors[i];
        REQUIRE(ratio > 25);
        REQUIRE(ratio < 400);
    }
}

TEST_CASE("first off-diagonal 2D moment is the inverse energy") {
    PrecisionScope scope(50);
    const Real B = parse_real("0.5"), eps = parse_real("0.37");
    const CoeffTable t = generate_qzm_moments(B, eps, 2, false);
    REQUIRE(abs(t.m2(0, 1, 0) - 1 / eps) < pow(Real(10), -40));
    REQUIRE(t.m2(0, 1, 1) == 0);
    REQUIRE(t.m2(0, 1, 2) == 0);
}

TEST_CASE("2D moments are symmetric under index exchange") {
    PrecisionScope scope(50);
    const CoeffTable t = generate_qzm_moments(Real(1), parse_real("0.8"), 3, false);
    for (long m = 0; m <= 3; ++m)
        for (long n = m; m + n <= 7; ++n)
            for (long l = 0; l <= 3; ++l) REQUIRE(t.m2(m, n, l) == t.m2(n, m, l));
}

TEST_CASE("higher-level 2D tables nest the lower-level ones") {
    PrecisionScope scope(50);
    const Real B = parse_real("0.2"), eps = parse_real("0.6");
    const CoeffTable small = generate_qzm_moments(B, eps, 2, false);
    const CoeffTable big = generate_qzm_moments(B, eps, 4, false);
    for (long d = 0; d <= 5; ++d)
        for (long m = 0; 2 * m <= d; ++m)
            for (long l = 0; l <= 2; ++l)
                REQUIRE(big.m2(m, d - m, l) == small.m2(m, d - m, l));
}

TEST_CASE("vanishing forward coefficient is reported, not divided through") {
    PrecisionScope scope(40);
    // field*n + eps = 0 at n = 2 for these values
    REQUIRE_THROWS_AS(generate_qzm_moments(Real(1), Real(-2), 2, false), SingularStep);
}

TEST_CASE("out-of-range lookups throw coverage errors") {
    PrecisionScope scope(40);
    const CoeffTable t = generate_qzm_moments(Real(1), Real(1), 2, false);
    REQUIRE_THROWS_AS(t.m2(0, 6, 0), CoverageError);
    const ProblemSpec prob = register_problem(HarmonicSpec{}.spec());
    const CoeffTable h = build_coeff_table(prob, Real(1), 3, false);
    REQUIRE_THROWS_AS(h.row_for_monomial(4), CoverageError);
}

TEST_CASE("monomial rows map onto the basis ordering") {
    PrecisionScope scope(40);
    const CoeffTable t = generate_qzm_moments(Real(1), Real(1), 2, false);
    for (long j = 0; j < monomial_count(5); ++j) {
        const Monomial2D mn = monomial_at(j);
        REQUIRE(t.row_for_monomial(j)[0] == t.m2(mn.m, mn.n, 0));
    }
}

TEST_CASE("problem gate rejects inadmissible energies") {
    PrecisionScope scope(40);
    QzmSpec q;
    q.field = 1;
    q.eps0 = parse_real("0.5");
    const ProblemSpec prob = register_problem(q.spec());
    REQUIRE_THROWS_AS(build_coeff_table(prob, Real(0), 5, false), ConfigError);
    REQUIRE_THROWS_AS(build_coeff_table(prob, Real(1), 4, false), ConfigError);  // even bound
}
