#ifndef PREDUCE_POLYNOMIAL_HPP
#define PREDUCE_POLYNOMIAL_HPP

#include <map>
#include <optional>
#include <vector>

#include "preduce/expr.hpp"

namespace preduce {

/// Expanded multivariate polynomial: exponent tuple -> coefficient.
/// The normal form behind exact closure and Jacobi checks; capped by
/// total degree so conversion of non-polynomial data fails fast.
class Polynomial {
public:
    using Monomial = std::vector<unsigned>;

    explicit Polynomial(int nvars) : nvars_(nvars) {}
    static Polynomial constant(int nvars, double c);
    static Polynomial variable(int nvars, int index);

    int nvars() const { return nvars_; }
    const std::map<Monomial, double>& terms() const { return terms_; }
    int total_degree() const;
    double max_abs_coefficient() const;
    bool is_zero(double tol = 0.0) const;

    Polynomial& operator+=(const Polynomial& other);
    Polynomial& operator-=(const Polynomial& other);
    Polynomial operator+(const Polynomial& other) const;
    Polynomial operator-(const Polynomial& other) const;
    Polynomial operator*(const Polynomial& other) const;
    Polynomial operator*(double c) const;

    Polynomial derivative(int index) const;
    double evaluate(const Eigen::VectorXd& x) const;
    Expression to_expression(const ChartPtr& chart) const;

    void add_term(const Monomial& m, double c);

private:
    int nvars_;
    std::map<Monomial, double> terms_;
};

/// Expand an expression into the polynomial normal form. Returns nullopt
/// for non-polynomial operations (functions, division by non-constants,
/// fractional or negative powers) or when the total degree would exceed
/// `max_total_degree`.
std::optional<Polynomial> to_polynomial(const Expression& e, int nvars, int max_total_degree = 8);

/// All exponent tuples of total degree <= degree, in a fixed
/// deterministic order (graded lexicographic).
std::vector<Polynomial::Monomial> monomials_up_to_degree(int nvars, int degree);

Expression monomial_expression(const ChartPtr& chart, const Polynomial::Monomial& m);

} // namespace preduce

#endif
