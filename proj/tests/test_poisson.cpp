#include <doctest.h>

#include <cmath>

#include "preduce/linalg.hpp"
#include "preduce/poisson.hpp"
#include "test_util.hpp"

using namespace preduce;
using preduce::testutil::central_diff;

namespace {

// Independent bracket oracle: direct expansion of the double sum with
// finite-difference gradients and pointwise tensor entries. Shares no
// code with bracket()'s symbolic assembly.
double oracle_bracket(const PoissonStructure& P, const Expression& f, const Expression& g,
                      const Eigen::VectorXd& z) {
    const int n = P.dimension();
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            sum += evaluate(P.entry(i, j), z) * central_diff(f, i, z) * central_diff(g, j, z);
    return sum;
}

std::vector<Eigen::VectorXd> box_samples(int n, int count, std::uint64_t seed) {
    Rng rng(seed);
    return sample_box(Box::cube(n, -2.0, 2.0), count, rng);
}

} // namespace

TEST_SUITE_BEGIN("poisson");

TEST_CASE("bracket: canonical defining relation and antisymmetry") {
    auto P = canonical_structure(1);
    auto q = parse("q1", P.chart());
    auto p = parse("p1", P.chart());
    CHECK(bracket(P, q, p).is_constant(1.0));

    auto f = parse("q1^2*p1", P.chart());
    CHECK(simplify(bracket(P, f, f)).is_constant(0.0));
}

TEST_CASE("bracket: so(3)* linear structure against the double-sum oracle") {
    auto P = so3_structure();
    auto x1 = parse("x1", P.chart());
    auto x2 = parse("x2", P.chart());
    CHECK(identical(bracket(P, x1, x2), simplify(parse("-x3", P.chart()))));

    // oracle agreement on a generic function pair
    auto f = parse("x1*x3 + x2^2", P.chart());
    auto g = parse("x3^2 - x1", P.chart());
    Expression fg = bracket(P, f, g);
    for (const auto& z : box_samples(3, 25, 3)) {
        CHECK(std::abs(evaluate(fg, z) - oracle_bracket(P, f, g, z)) <= 1e-5 * (1.0 + std::abs(evaluate(fg, z))));
    }
}

TEST_CASE("hamiltonian_vector_field: harmonic oscillator field") {
    auto P = canonical_structure(1);
    auto h = parse("(p1^2 + q1^2)/2", P.chart());
    VectorFieldExpr X = hamiltonian_vector_field(P, h);
    CHECK(identical(X.components[0], Expression::coordinate(P.chart(), 1)));  // qdot = p
    CHECK(identical(X.components[1], simplify(-Expression::coordinate(P.chart(), 0)))); // pdot = -q

    VectorFieldExpr Xc = hamiltonian_vector_field(P, Expression(4.2));
    CHECK(Xc.components[0].is_constant(0.0));
    CHECK(Xc.components[1].is_constant(0.0));
}

TEST_CASE("hamiltonian_vector_field: rigid body equations at 50 points") {
    auto P = so3_structure();
    const double I1 = 1.0, I2 = 2.0, I3 = 3.0;
    auto h = parse("(x1^2/1 + x2^2/2 + x3^2/3)/2", P.chart());
    VectorFieldExpr X = hamiltonian_vector_field(P, h);
    for (const auto& z : box_samples(3, 50, 5)) {
        // brute-force component expansion
        double e1 = z[1] * z[2] * (1.0 / I3 - 1.0 / I2);
        double e2 = z[0] * z[2] * (1.0 / I1 - 1.0 / I3);
        double e3 = z[0] * z[1] * (1.0 / I2 - 1.0 / I1);
        Eigen::VectorXd v = X.evaluate(z);
        CHECK(std::abs(v[0] - e1) <= 1e-14);
        CHECK(std::abs(v[1] - e2) <= 1e-14);
        CHECK(std::abs(v[2] - e3) <= 1e-14);
    }
}

TEST_CASE("jacobi_residual: constant, linear, and corrupted tensors") {
    auto P4 = canonical_structure(2);
    for (const auto& z : box_samples(4, 10, 7)) CHECK(jacobi_residual(P4, z) == 0.0);

    auto P = so3_structure();
    for (const auto& z : box_samples(3, 100, 9)) CHECK(jacobi_residual(P, z) <= 1e-14);
    CHECK(P.jacobi_proved_symbolically());

    // perturbed so(3)*: B^{12} <- B^{12} + x1*x3 breaks Jacobi
    auto chart = P.chart();
    auto x = coordinates(chart);
    std::vector<std::vector<Expression>> raw(3, std::vector<Expression>(3, Expression(0.0)));
    raw[0][1] = simplify(-x[2] + x[0] * x[2]);
    raw[1][0] = simplify(-raw[0][1]);
    raw[0][2] = x[1];
    raw[2][0] = simplify(-x[1]);
    raw[1][2] = simplify(-x[0]);
    raw[2][1] = x[0];
    int generic = 0;
    for (const auto& z : box_samples(3, 20, 11)) {
        if (jacobi_residual_of_entries(chart, raw, z) > 0.1) ++generic;
    }
    CHECK(generic >= 15);
    CHECK_THROWS_AS(PoissonStructure(chart, raw), StructureError);
}

TEST_CASE("constructor: antisymmetry is required as an expression identity") {
    auto chart = make_chart({"q", "p"});
    std::vector<std::vector<Expression>> raw(2, std::vector<Expression>(2, Expression(0.0)));
    raw[0][1] = Expression(1.0);
    raw[1][0] = Expression(1.0); // wrong sign
    CHECK_THROWS_AS(PoissonStructure(chart, raw), StructureError);
}

TEST_CASE("constructor: non-polynomial entries fall back to sampled Jacobi") {
    auto chart = make_chart({"x1", "x2", "x3"});
    std::vector<std::vector<Expression>> raw(3, std::vector<Expression>(3, Expression(0.0)));
    raw[0][1] = parse("exp(x3)", chart);
    raw[1][0] = simplify(-parse("exp(x3)", chart));
    PoissonStructure P(chart, raw);
    CHECK(!P.jacobi_proved_symbolically());
    for (const auto& z : box_samples(3, 20, 13)) CHECK(jacobi_residual(P, z) <= 1e-12);
}

TEST_CASE("is_casimir: sphere function, coordinate, constant") {
    auto P = so3_structure();
    auto samples = box_samples(3, 50, 15);
    auto c = parse("x1^2 + x2^2 + x3^2", P.chart());
    auto rep = is_casimir(P, c, samples);
    CHECK(rep.passed);
    CHECK(rep.worst <= 1e-14);

    auto P2 = canonical_structure(1);
    auto samples2 = box_samples(2, 50, 17);
    auto repq = is_casimir(P2, parse("q1", P2.chart()), samples2);
    CHECK(!repq.passed);
    CHECK(repq.worst == doctest::Approx(1.0).epsilon(1e-14));

    auto repc = is_casimir(P2, Expression(7.5), samples2);
    CHECK(repc.passed);
    CHECK(repc.worst == 0.0);
}

TEST_CASE("characteristic_rank") {
    auto P4 = canonical_structure(2);
    for (const auto& z : box_samples(4, 10, 19)) CHECK(characteristic_rank(P4, z) == 4);

    auto P = so3_structure();
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(3);
    CHECK(characteristic_rank(P, origin) == 0);
    Eigen::VectorXd e1(3);
    e1 << 1, 0, 0;
    CHECK(characteristic_rank(P, e1) == 2);

    auto Pt = canonical_structure(1, 1); // canonical R^2 x trivial R
    for (const auto& z : box_samples(3, 10, 21)) CHECK(characteristic_rank(Pt, z) == 2);
}

TEST_CASE("characteristic_rank: even at sampled points for every fixture") {
    std::vector<PoissonStructure> fixtures;
    fixtures.push_back(canonical_structure(1));
    fixtures.push_back(canonical_structure(2));
    fixtures.push_back(so3_structure());
    fixtures.push_back(canonical_structure(2, 1));
    for (const auto& P : fixtures) {
        for (const auto& z : box_samples(P.dimension(), 30, 23)) {
            CHECK(characteristic_rank(P, z) % 2 == 0);
        }
    }
}

TEST_CASE("check_poisson_map: identity, symplectic scaling, non-canonical scaling") {
    auto P = canonical_structure(1);
    auto samples = box_samples(2, 20, 25);

    auto id = SmoothMap::identity(P.chart());
    CHECK(check_poisson_map(id, P, P, samples).passed);

    auto sympl = SmoothMap(P.chart(), P.chart(), {parse("2*q1", P.chart()), parse("p1/2", P.chart())});
    CHECK(check_poisson_map(sympl, P, P, samples).passed);

    auto bad = SmoothMap(P.chart(), P.chart(), {parse("2*q1", P.chart()), parse("2*p1", P.chart())});
    auto rep = check_poisson_map(bad, P, P, samples);
    CHECK(!rep.passed);
    // coordinate pair residual is exactly |{2q,2p} - 1| = 3 at every point
    Expression lhs = bad.pullback(bracket(P, parse("q1", P.chart()), parse("p1", P.chart())));
    Expression rhs = bracket(P, bad.pullback(parse("q1", P.chart())), bad.pullback(parse("p1", P.chart())));
    for (const auto& z : samples)
        CHECK(std::abs(evaluate(simplify(rhs - lhs), z)) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("check_canonical_action: rotations pass, reflection fails") {
    auto P = canonical_structure(2);
    auto c = P.chart();
    auto samples = box_samples(4, 15, 27);

    // simultaneous rotation of (q1,q2) and (p1,p2) at 8 sampled angles
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "(%.17g)", v);
        return std::string(buf);
    };
    std::vector<SmoothMap> rotations;
    for (int k = 0; k < 8; ++k) {
        double th = 2.0 * M_PI * k / 8.0;
        std::string ct = num(std::cos(th));
        std::string st = num(std::sin(th));
        rotations.emplace_back(c, c,
                               std::vector<Expression>{
                                   parse(ct + "*q1 - " + st + "*q2", c),
                                   parse(st + "*q1 + " + ct + "*q2", c),
                                   parse(ct + "*p1 - " + st + "*p2", c),
                                   parse(st + "*p1 + " + ct + "*p2", c),
                               });
    }
    CHECK(check_canonical_action(rotations, P, samples, 1e-9).passed);

    auto P1 = canonical_structure(1);
    std::vector<SmoothMap> refl;
    refl.emplace_back(P1.chart(), P1.chart(),
                      std::vector<Expression>{parse("q1", P1.chart()), parse("-p1", P1.chart())});
    CHECK(!check_canonical_action(refl, P1, box_samples(2, 15, 29)).passed);

    std::vector<SmoothMap> only_id = {SmoothMap::identity(P.chart())};
    CHECK(check_canonical_action(only_id, P, samples).passed);
}

TEST_CASE("check_poisson_distribution: Hamiltonian span, full tangent, coordinate field") {
    auto P = canonical_structure(2);
    auto samples = box_samples(4, 40, 31);

    // D = span{X_h}: quadratic invariants exist, flow-invariance of the bracket
    auto h = parse("(q1^2 + p1^2)/2 + (q2^2 + p2^2)/2", P.chart());
    std::vector<VectorFieldExpr> D = {hamiltonian_vector_field(P, h)};
    auto rep = check_poisson_distribution(P, D, samples);
    CHECK(rep.passed);
    CHECK(rep.annihilating_family_size >= 3);

    // full tangent space: only constants annihilate, vacuous pass
    std::vector<VectorFieldExpr> full;
    for (int i = 0; i < 4; ++i) {
        std::vector<Expression> comps(4, Expression(0.0));
        comps[static_cast<std::size_t>(i)] = Expression(1.0);
        full.emplace_back(P.chart(), comps);
    }
    auto repf = check_poisson_distribution(P, full, samples);
    CHECK(repf.passed);
    CHECK(repf.annihilating_family_size == 0);

    // D = span{d/dq1} on canonical R^2: annihilating functions depend on p only
    auto P2 = canonical_structure(1);
    std::vector<Expression> comps = {Expression(1.0), Expression(0.0)};
    std::vector<VectorFieldExpr> Dq = {VectorFieldExpr(P2.chart(), comps)};
    auto rep2 = check_poisson_distribution(P2, Dq, box_samples(2, 30, 33));
    CHECK(rep2.passed);
    CHECK(rep2.annihilating_family_size >= 2); // p, p^2 at least
}

TEST_CASE("property: Leibniz rule at 100 points") {
    auto P = so3_structure();
    Rng rng(35);
    auto samples = box_samples(3, 100, 37);
    for (int t = 0; t < 4; ++t) {
        Expression f = random_polynomial(P.chart(), 2, rng);
        Expression g = random_polynomial(P.chart(), 2, rng);
        Expression h = random_polynomial(P.chart(), 2, rng);
        Expression resid = simplify(bracket(P, f * g, h) - f * bracket(P, g, h) - g * bracket(P, f, h));
        for (const auto& z : samples) CHECK(std::abs(evaluate(resid, z)) <= 1e-12);
    }
}

TEST_CASE("property: antisymmetry and bilinearity as evaluated identities") {
    auto P = canonical_structure(2);
    Rng rng(39);
    auto samples = box_samples(4, 60, 41);
    Expression f = random_polynomial(P.chart(), 2, rng);
    Expression g = random_polynomial(P.chart(), 2, rng);
    Expression h = random_polynomial(P.chart(), 2, rng);
    double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);

    Expression anti = simplify(bracket(P, f, g) + bracket(P, g, f));
    Expression bilin = simplify(bracket(P, Expression(a) * f + Expression(b) * g, h) -
                                Expression(a) * bracket(P, f, h) - Expression(b) * bracket(P, g, h));
    for (const auto& z : samples) {
        CHECK(std::abs(evaluate(anti, z)) <= 1e-13);
        CHECK(std::abs(evaluate(bilin, z)) <= 1e-13);
    }
}

TEST_CASE("property: nested Jacobi identity at 100 points") {
    for (int which = 0; which < 2; ++which) {
        PoissonStructure P = which == 0 ? canonical_structure(2) : so3_structure();
        Rng rng(43 + static_cast<unsigned>(which));
        auto samples = box_samples(P.dimension(), 100, 45 + static_cast<unsigned>(which));
        Expression f = random_polynomial(P.chart(), 2, rng);
        Expression g = random_polynomial(P.chart(), 2, rng);
        Expression h = random_polynomial(P.chart(), 2, rng);
        Expression jac = simplify(bracket(P, f, bracket(P, g, h)) + bracket(P, g, bracket(P, h, f)) +
                                  bracket(P, h, bracket(P, f, g)));
        for (const auto& z : samples) CHECK(std::abs(evaluate(jac, z)) <= 1e-9);
    }
}

TEST_CASE("property: X_h[f] equals {f,h} along the field") {
    auto P = so3_structure();
    Rng rng(47);
    auto samples = box_samples(3, 50, 49);
    Expression h = random_polynomial(P.chart(), 2, rng);
    Expression f = random_polynomial(P.chart(), 2, rng);
    VectorFieldExpr X = hamiltonian_vector_field(P, h);
    Expression fh = bracket(P, f, h);
    auto df = gradient(f, P.chart());
    for (const auto& z : samples) {
        Eigen::VectorXd v = X.evaluate(z);
        double directional = 0.0;
        for (int i = 0; i < 3; ++i) directional += evaluate(df[static_cast<std::size_t>(i)], z) * v[i];
        CHECK(std::abs(directional - evaluate(fh, z)) <= 1e-12 * (1.0 + std::abs(directional)));
    }
}

TEST_CASE("direct_sum: block structure and chart concatenation") {
    auto P = direct_sum(so3_structure(), canonical_structure(1));
    CHECK(P.dimension() == 5);
    CHECK(P.chart()->name(3) == "q1");
    Eigen::VectorXd z(5);
    z << 0.5, -1.0, 2.0, 0.3, 0.7;
    Eigen::MatrixXd B = P.tensor_at(z);
    CHECK(B(0, 1) == doctest::Approx(-2.0));  // -x3
    CHECK(B(3, 4) == doctest::Approx(1.0));   // {q1,p1}
    CHECK(B.block(0, 3, 3, 2).norm() == 0.0); // off-diagonal blocks vanish
}

TEST_SUITE_END();
