#include <doctest.h>

#include <cmath>
#include <memory>

#include "preduce/dirac.hpp"
#include "preduce/linalg.hpp"
#include "test_util.hpp"

using namespace preduce;

namespace {

struct Fixture {
    PoissonPtr P;
    std::shared_ptr<const ConstraintSet> C;
    std::vector<SurfaceSample> samples;
    DiracPtr D;
};

// Flat: psi = (q2, p2) inside canonical R^4.
Fixture flat_fixture(int nsamples = 30) {
    Fixture f;
    f.P = std::make_shared<PoissonStructure>(canonical_structure(2));
    f.C = std::make_shared<ConstraintSet>(
        f.P, std::vector<Expression>{parse("q2", f.P->chart()), parse("p2", f.P->chart())},
        std::vector<Eigen::VectorXd>{Eigen::VectorXd::Zero(4)});
    f.samples = sample_surface(*f.C, nsamples);
    f.D = std::make_shared<DiracContext>(f.C, f.samples);
    return f;
}

// Curved: so(3)* x canonical R^2 with constraints mixing the factors;
// C(s) = (1 - x2) J is position dependent.
Fixture curved_fixture(int nsamples = 30) {
    Fixture f;
    f.P = std::make_shared<PoissonStructure>(direct_sum(so3_structure(), canonical_structure(1)));
    Eigen::VectorXd seed(5);
    seed << 0.4, -0.3, 0.5, 0.5, 0.4; // q1 = x3, p1 = x1
    f.C = std::make_shared<ConstraintSet>(
        f.P, std::vector<Expression>{parse("q1 - x3", f.P->chart()), parse("p1 - x1", f.P->chart())},
        std::vector<Eigen::VectorXd>{seed});
    f.samples = sample_surface(*f.C, nsamples);
    f.D = std::make_shared<DiracContext>(f.C, f.samples);
    return f;
}

Eigen::VectorXd gradient_at(const Expression& e, const ChartPtr& chart, const Eigen::VectorXd& z) {
    auto g = gradient(e, chart);
    Eigen::VectorXd v(chart->dimension());
    for (int i = 0; i < chart->dimension(); ++i) v[i] = evaluate(g[static_cast<std::size_t>(i)], z);
    return v;
}

} // namespace

TEST_SUITE_BEGIN("dirac");

TEST_CASE("context: rejects non-cosymplectic constraint sets") {
    auto P = std::make_shared<PoissonStructure>(canonical_structure(2));
    auto C = std::make_shared<ConstraintSet>(
        P, std::vector<Expression>{parse("p1", P->chart()), parse("p2", P->chart())},
        std::vector<Eigen::VectorXd>{Eigen::VectorXd::Zero(4)});
    auto samples = sample_surface(*C, 10);
    CHECK_THROWS_AS(DiracContext(C, samples), StructureError);
}

TEST_CASE("context: curved fixture classifies cosymplectic and caches symbolic inverse") {
    auto f = curved_fixture(20);
    CHECK(f.D->symbolic_inverse());
    // det C = (1 - x2)^2
    for (const auto& s : f.samples) {
        double det = evaluate(f.D->determinant(), s.z);
        double expected = std::pow(1.0 - s.z[1], 2);
        CHECK(det == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("dirac_bracket_value: flat fixture worked examples") {
    auto f = flat_fixture(20);
    auto q1 = parse("q1", f.P->chart());
    auto p1 = parse("p1", f.P->chart());
    auto q2 = parse("q2", f.P->chart());

    for (const auto& s : f.samples) {
        CHECK(dirac_bracket_value(*f.D, q1, p1, s) == doctest::Approx(1.0).epsilon(1e-14));
        // constraints act as Casimirs
        CHECK(std::abs(dirac_bracket_value(*f.D, q2, parse("q1*p1 + p2^2", f.P->chart()), s)) <= 1e-13);
        // antisymmetry forces {F,F} = 0
        CHECK(std::abs(dirac_bracket_value(*f.D, q1, q1, s)) <= 1e-14);
    }
}

TEST_CASE("dirac_bracket_expr: constant reduced bracket and structural Casimir") {
    auto f = flat_fixture(20);
    auto e = dirac_bracket_expr(*f.D, parse("q1", f.P->chart()), parse("p1", f.P->chart()));
    CHECK(e.is_constant(1.0));

    // {psi^1, G}^S collapses to the zero expression for this fixture
    auto z = dirac_bracket_expr(*f.D, parse("q2", f.P->chart()), parse("q1^2*p1", f.P->chart()));
    CHECK(simplify(z).is_constant(0.0));

    Rng rng(101);
    for (int t = 0; t < 3; ++t) {
        Expression G = random_polynomial(f.P->chart(), 2, rng);
        Expression zt = dirac_bracket_expr(*f.D, parse("q2", f.P->chart()), G);
        for (const auto& s : f.samples) CHECK(std::abs(evaluate(zt, s.z)) <= 1e-12);
    }
}

TEST_CASE("dirac_bracket_expr: oracle equivalence with the canonical R^2 bracket") {
    // The reduced bracket of restrictions must match the canonical
    // bracket on (q1, p1): an independent reduction path.
    auto f = flat_fixture(40);
    auto P2 = canonical_structure(1);
    auto restrict4to2 = [&](const Expression& F) {
        // q1 -> q1, q2 -> 0, p1 -> p1, p2 -> 0
        std::vector<Expression> comps = {parse("q1", P2.chart()), Expression(0.0),
                                         parse("p1", P2.chart()), Expression(0.0)};
        return simplify(compose(F, comps, P2.chart()));
    };
    Rng rng(103);
    for (int t = 0; t < 10; ++t) {
        Expression F = random_polynomial(f.P->chart(), 2, rng);
        Expression G = random_polynomial(f.P->chart(), 2, rng);
        Expression reduced_oracle = bracket(P2, restrict4to2(F), restrict4to2(G));
        Eigen::VectorXd vals = dirac_bracket_values(*f.D, F, G, f.samples);
        for (std::size_t i = 0; i < f.samples.size(); ++i) {
            Eigen::VectorXd y(2);
            y << f.samples[i].z[0], f.samples[i].z[2];
            CHECK(std::abs(vals[static_cast<Eigen::Index>(i)] - evaluate(reduced_oracle, y)) <= 1e-10);
        }
    }
}

TEST_CASE("dirac brackets: extension independence on both fixtures") {
    for (int which = 0; which < 2; ++which) {
        auto f = which == 0 ? flat_fixture(15) : curved_fixture(15);
        Rng rng(105 + static_cast<unsigned>(which));
        for (int t = 0; t < 4; ++t) {
            Expression F = random_polynomial(f.P->chart(), 2, rng);
            Expression G = random_polynomial(f.P->chart(), 2, rng);
            Expression Fp = F;
            for (int a = 0; a < f.C->size(); ++a)
                Fp = Fp + random_polynomial(f.P->chart(), 2, rng) * f.C->constraint(a);
            Eigen::VectorXd v1 = dirac_bracket_values(*f.D, F, G, f.samples);
            Eigen::VectorXd v2 = dirac_bracket_values(*f.D, simplify(Fp), G, f.samples);
            CHECK((v1 - v2).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("dirac brackets: constraints are Casimirs on both fixtures") {
    for (int which = 0; which < 2; ++which) {
        auto f = which == 0 ? flat_fixture(15) : curved_fixture(15);
        Rng rng(107 + static_cast<unsigned>(which));
        for (int a = 0; a < f.C->size(); ++a) {
            for (int t = 0; t < 3; ++t) {
                Expression G = random_polynomial(f.P->chart(), 2, rng);
                Eigen::VectorXd v = dirac_bracket_values(*f.D, f.C->constraint(a), G, f.samples);
                CHECK(v.cwiseAbs().maxCoeff() <= 1e-10);
            }
        }
    }
}

TEST_CASE("dirac brackets: Leibniz and antisymmetry at samples") {
    for (int which = 0; which < 2; ++which) {
        auto f = which == 0 ? flat_fixture(10) : curved_fixture(10);
        Rng rng(109 + static_cast<unsigned>(which));
        Expression F = random_polynomial(f.P->chart(), 2, rng);
        Expression G = random_polynomial(f.P->chart(), 2, rng);
        Expression H = random_polynomial(f.P->chart(), 2, rng);
        Eigen::VectorXd fg = dirac_bracket_values(*f.D, F, G, f.samples);
        Eigen::VectorXd gf = dirac_bracket_values(*f.D, G, F, f.samples);
        CHECK((fg + gf).cwiseAbs().maxCoeff() <= 1e-10);

        Eigen::VectorXd fgh = dirac_bracket_values(*f.D, simplify(F * G), H, f.samples);
        Eigen::VectorXd gh = dirac_bracket_values(*f.D, G, H, f.samples);
        Eigen::VectorXd fh = dirac_bracket_values(*f.D, F, H, f.samples);
        for (std::size_t i = 0; i < f.samples.size(); ++i) {
            auto idx = static_cast<Eigen::Index>(i);
            double fz = evaluate(F, f.samples[i].z), gz = evaluate(G, f.samples[i].z);
            CHECK(std::abs(fgh[idx] - fz * gh[idx] - gz * fh[idx]) <= 1e-10);
        }
    }
}

TEST_CASE("dirac brackets: nested Jacobi identity on both fixtures") {
    for (int which = 0; which < 2; ++which) {
        auto f = which == 0 ? flat_fixture(12) : curved_fixture(12);
        std::vector<std::array<Expression, 3>> triples;
        triples.push_back({parse("q1", f.P->chart()), parse("p1", f.P->chart()),
                           parse("q1*p1", f.P->chart())});
        Rng rng(111 + static_cast<unsigned>(which));
        triples.push_back({random_polynomial(f.P->chart(), 2, rng), random_polynomial(f.P->chart(), 2, rng),
                           random_polynomial(f.P->chart(), 2, rng)});
        for (const auto& [F, G, H] : triples) {
            Expression s1 = dirac_bracket_expr(*f.D, F, dirac_bracket_expr(*f.D, G, H));
            Expression s2 = dirac_bracket_expr(*f.D, G, dirac_bracket_expr(*f.D, H, F));
            Expression s3 = dirac_bracket_expr(*f.D, H, dirac_bracket_expr(*f.D, F, G));
            Expression cyc = simplify(s1 + s2 + s3);
            for (const auto& s : f.samples) CHECK(std::abs(evaluate(cyc, s.z)) <= 1e-8);
        }
    }
}

TEST_CASE("dirac_vector_field: flat fixture worked examples") {
    auto f = flat_fixture(10);
    auto F = parse("(q1^2 + p1^2)/2", f.P->chart());
    for (const auto& s : f.samples) {
        Eigen::VectorXd v = dirac_vector_field(*f.D, F, s);
        CHECK(v[0] == doctest::Approx(s.z[2]).epsilon(1e-13));  // p1
        CHECK(std::abs(v[1]) <= 1e-13);
        CHECK(v[2] == doctest::Approx(-s.z[0]).epsilon(1e-13)); // -q1
        CHECK(std::abs(v[3]) <= 1e-13);
    }
    for (const auto& s : f.samples) {
        CHECK(dirac_vector_field(*f.D, f.C->constraint(0), s).cwiseAbs().maxCoeff() <= 1e-13);
        CHECK(dirac_vector_field(*f.D, Expression(3.0), s).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("dirac_vector_field: tangency on both fixtures") {
    for (int which = 0; which < 2; ++which) {
        auto f = which == 0 ? flat_fixture(15) : curved_fixture(15);
        Rng rng(113 + static_cast<unsigned>(which));
        for (int t = 0; t < 4; ++t) {
            Expression F = random_polynomial(f.P->chart(), 2, rng);
            for (const auto& s : f.samples) {
                Eigen::VectorXd v = dirac_vector_field(*f.D, F, s);
                CHECK((s.conormal.transpose() * v).cwiseAbs().maxCoeff() <= 1e-10);
            }
        }
    }
}

TEST_CASE("projection_pi_S: flat fixture projector") {
    auto f = flat_fixture(10);
    for (const auto& s : f.samples) {
        Eigen::MatrixXd pi = projection_pi_S(*f.D, s);
        // image is the (q1,p1) plane for this fixture
        Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(4, 4);
        expected(0, 0) = expected(2, 2) = 1.0;
        CHECK((pi - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("projection_pi_S: idempotent with the right image and kernel") {
    for (int which = 0; which < 2; ++which) {
        auto f = which == 0 ? flat_fixture(10) : curved_fixture(10);
        for (const auto& s : f.samples) {
            Eigen::MatrixXd pi = projection_pi_S(*f.D, s);
            CHECK((pi * pi - pi).cwiseAbs().maxCoeff() <= 1e-12);
            // fixes every tangent vector
            CHECK((pi * s.tangent - s.tangent).cwiseAbs().maxCoeff() <= 1e-12);
            // kills B# of the conormal directions
            Eigen::MatrixXd U = f.P->tensor_at(s.z) * s.conormal;
            CHECK((pi * U).cwiseAbs().maxCoeff() <= 1e-11);
        }
    }
}

TEST_CASE("reduced_tensor: flat fixture canonical block") {
    auto f = flat_fixture(10);
    auto q1 = parse("q1", f.P->chart());
    auto p1 = parse("p1", f.P->chart());
    for (const auto& s : f.samples) {
        ProjectedTensor t = reduced_tensor(*f.D, s);
        Eigen::VectorXd dq1 = gradient_at(q1, f.P->chart(), s.z);
        Eigen::VectorXd dp1 = gradient_at(p1, f.P->chart(), s.z);
        CHECK(dq1.dot(t.ambient * dp1) == doctest::Approx(1.0).epsilon(1e-12));
        // conormal rows and columns vanish
        CHECK((t.ambient * s.conormal).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((s.conormal.transpose() * t.ambient).cwiseAbs().maxCoeff() <= 1e-12);
        // tangential block is a rank-2 canonical rotation up to basis
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.tangential);
        CHECK(svd.singularValues()(0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(svd.singularValues()(1) == doctest::Approx(1.0).epsilon(1e-12));
        // antisymmetric
        CHECK((t.ambient + t.ambient.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("reduced_tensor pairing agrees with dirac_bracket_value on both fixtures") {
    for (int which = 0; which < 2; ++which) {
        auto f = which == 0 ? flat_fixture(12) : curved_fixture(12);
        Rng rng(115 + static_cast<unsigned>(which));
        for (int t = 0; t < 20; ++t) {
            Expression F = random_polynomial(f.P->chart(), 2, rng);
            Expression G = random_polynomial(f.P->chart(), 2, rng);
            Eigen::VectorXd vals = dirac_bracket_values(*f.D, F, G, f.samples);
            for (std::size_t i = 0; i < f.samples.size(); ++i) {
                const auto& s = f.samples[i];
                ProjectedTensor rt = reduced_tensor(*f.D, s);
                Eigen::VectorXd dF = gradient_at(F, f.P->chart(), s.z);
                Eigen::VectorXd dG = gradient_at(G, f.P->chart(), s.z);
                CHECK(std::abs(dF.dot(rt.ambient * dG) - vals[static_cast<Eigen::Index>(i)]) <= 1e-10);
            }
        }
    }
}

TEST_CASE("block form: the projected tensor has no mixed block") {
    for (int which = 0; which < 2; ++which) {
        auto f = which == 0 ? flat_fixture(10) : curved_fixture(10);
        for (const auto& s : f.samples) {
            Eigen::MatrixXd pi = projection_pi_S(*f.D, s);
            Eigen::MatrixXd B = f.P->tensor_at(s.z);
            Eigen::MatrixXd I = Eigen::MatrixXd::Identity(f.P->dimension(), f.P->dimension());
            Eigen::MatrixXd mixed = pi * B * (I - pi).transpose();
            CHECK(mixed.cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("leaf_orthogonality_check on both fixtures") {
    for (int which = 0; which < 2; ++which) {
        auto f = which == 0 ? flat_fixture(15) : curved_fixture(15);
        for (const auto& s : f.samples) {
            auto rep = leaf_orthogonality_check(*f.D, s);
            CHECK(rep.passed);
            CHECK(rep.pairing_worst <= 1e-10);
            CHECK(rep.nondegeneracy_margin > 1e-10);
            CHECK(rep.dimension_split_ok);
            if (which == 0) {
                CHECK(rep.dim_u == 2);
                CHECK(rep.dim_w == 2);
                CHECK(rep.rank_b == 4);
                // canonical 2x2 block: |det C| = 1
                CHECK(std::abs(f.D->c_matrix_at(s.z).determinant()) == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("reduced_leaf_dimension") {
    auto f = flat_fixture(8);
    for (const auto& s : f.samples) CHECK(reduced_leaf_dimension(*f.D, s) == 2);

    auto g = curved_fixture(8);
    for (const auto& s : g.samples) {
        CHECK(reduced_leaf_dimension(*g.D, s) == 2);
        // equals dim(T_sS ∩ im B#) by construction of the leaf report
        auto rep = leaf_orthogonality_check(*g.D, s);
        CHECK(reduced_leaf_dimension(*g.D, s) == rep.dim_w);
    }
}

TEST_CASE("singular C policy: aborts with a witness instead of regularizing") {
    // On so(3)* x R^2 the pair (q1 - x3, p1 - x1) has det C = (1-x2)^2,
    // singular where x2 = 1.
    auto f = curved_fixture(8);
    Eigen::VectorXd bad(5);
    bad << 0.3, 1.0, 0.2, 0.2, 0.3; // x2 = 1
    CHECK_THROWS_AS(f.D->c_inverse_at(bad), NumericalError);
}

TEST_SUITE_END();
