#ifndef PREDUCE_TEST_FIXTURES_HPP
#define PREDUCE_TEST_FIXTURES_HPP

#include <cmath>
#include <memory>

#include "preduce/quotient.hpp"

namespace preduce::testutil {

/// Phase rotation of the 1:1 resonance: (q_j, p_j) -> (q_j cos + p_j sin,
/// -q_j sin + p_j cos) simultaneously in both planes. Chart order is
/// (q1, q2, p1, p2).
inline SmoothMap phase_rotation(const ChartPtr& c, double theta) {
    Expression q1 = Expression::coordinate(c, 0), q2 = Expression::coordinate(c, 1);
    Expression p1 = Expression::coordinate(c, 2), p2 = Expression::coordinate(c, 3);
    Expression ct(std::cos(theta)), st(std::sin(theta));
    return SmoothMap(c, c,
                     {ct * q1 + st * p1, ct * q2 + st * p2, ct * p1 - st * q1, ct * p2 - st * q2});
}

/// The 1:1 resonance quotient: Hopf-type quadratic invariants
///   s0 = (|q|^2 + |p|^2)/2,  s1 = q1 q2 + p1 p2,
///   s2 = q1 p2 - q2 p1,      s3 = (q1^2 + p1^2 - q2^2 - p2^2)/2
/// with closure {s1,s2} = 2 s3 (cyclically) and s0 central, and the
/// image cut by s1^2 + s2^2 + s3^2 = s0^2.
inline QuotientSpec resonance_quotient(const PoissonPtr& P, int angles = 8) {
    const auto& c = P->chart();
    std::vector<SmoothMap> action;
    for (int k = 0; k < angles; ++k) action.push_back(phase_rotation(c, 2.0 * M_PI * k / angles));

    std::vector<Expression> gens = {
        parse("(q1^2 + p1^2 + q2^2 + p2^2)/2", c),
        parse("q1*q2 + p1*p2", c),
        parse("q1*p2 - q2*p1", c),
        parse("(q1^2 + p1^2 - q2^2 - p2^2)/2", c),
    };
    ChartPtr y = make_chart({"s0", "s1", "s2", "s3"});
    std::vector<std::vector<Expression>> lam(4, std::vector<Expression>(4, Expression(0.0)));
    lam[1][2] = parse("2*s3", y);
    lam[2][1] = parse("-2*s3", y);
    lam[2][3] = parse("2*s1", y);
    lam[3][2] = parse("-2*s1", y);
    lam[3][1] = parse("2*s2", y);
    lam[1][3] = parse("-2*s2", y);
    std::vector<Expression> relations = {parse("s1^2 + s2^2 + s3^2 - s0^2", y)};
    return QuotientSpec(P, std::move(action), std::move(gens), y, std::move(lam), std::move(relations));
}

/// Translation of q2 on canonical R^4: invariants (q1, p1, p2), reduced
/// bracket canonical on (y1, y2) with y3 a Casimir.
inline QuotientSpec translation_quotient(const PoissonPtr& P) {
    const auto& c = P->chart();
    std::vector<SmoothMap> action;
    for (double s : {-1.0, -0.4, 0.3, 1.0, 2.2}) {
        Expression shift(s);
        action.emplace_back(c, c,
                            std::vector<Expression>{Expression::coordinate(c, 0),
                                                    Expression::coordinate(c, 1) + shift,
                                                    Expression::coordinate(c, 2),
                                                    Expression::coordinate(c, 3)});
    }
    std::vector<Expression> gens = {parse("q1", c), parse("p1", c), parse("p2", c)};
    ChartPtr y = make_chart({"y1", "y2", "y3"});
    std::vector<std::vector<Expression>> lam(3, std::vector<Expression>(3, Expression(0.0)));
    lam[0][1] = Expression(1.0);
    lam[1][0] = Expression(-1.0);
    return QuotientSpec(P, std::move(action), std::move(gens), y, std::move(lam));
}

} // namespace preduce::testutil

#endif
