#include "preduce/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace preduce {

Polynomial Polynomial::constant(int nvars, double c) {
    Polynomial p(nvars);
    if (c != 0.0) p.terms_[Monomial(static_cast<std::size_t>(nvars), 0u)] = c;
    return p;
}

Polynomial Polynomial::variable(int nvars, int index) {
    Polynomial p(nvars);
    Monomial m(static_cast<std::size_t>(nvars), 0u);
    m[static_cast<std::size_t>(index)] = 1;
    p.terms_[m] = 1.0;
    return p;
}

int Polynomial::total_degree() const {
    int deg = 0;
    for (const auto& [m, c] : terms_) {
        int d = 0;
        for (unsigned e : m) d += static_cast<int>(e);
        deg = std::max(deg, d);
    }
    return deg;
}

double Polynomial::max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

bool Polynomial::is_zero(double tol) const {
    for (const auto& [m, c] : terms_)
        if (std::abs(c) > tol) return false;
    return true;
}

void Polynomial::add_term(const Monomial& m, double c) {
    if (c == 0.0) return;
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        terms_[m] = c;
    } else {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
    for (const auto& [m, c] : other.terms_) add_term(m, c);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
    for (const auto& [m, c] : other.terms_) add_term(m, -c);
    return *this;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
    Polynomial r = *this;
    r += other;
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
    Polynomial r = *this;
    r -= other;
    return r;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
    Polynomial r(nvars_);
    for (const auto& [ma, ca] : terms_) {
        for (const auto& [mb, cb] : other.terms_) {
            Monomial m(static_cast<std::size_t>(nvars_), 0u);
            for (int i = 0; i < nvars_; ++i)
                m[static_cast<std::size_t>(i)] =
                    ma[static_cast<std::size_t>(i)] + mb[static_cast<std::size_t>(i)];
            r.add_term(m, ca * cb);
        }
    }
    return r;
}

Polynomial Polynomial::operator*(double c) const {
    Polynomial r(nvars_);
    if (c == 0.0) return r;
    for (const auto& [m, coef] : terms_) r.terms_[m] = coef * c;
    return r;
}

Polynomial Polynomial::derivative(int index) const {
    Polynomial r(nvars_);
    auto idx = static_cast<std::size_t>(index);
    for (const auto& [m, c] : terms_) {
        if (m[idx] == 0) continue;
        Monomial d = m;
        d[idx] -= 1;
        r.add_term(d, c * static_cast<double>(m[idx]));
    }
    return r;
}

double Polynomial::evaluate(const Eigen::VectorXd& x) const {
    double sum = 0.0;
    for (const auto& [m, c] : terms_) {
        double t = c;
        for (int i = 0; i < nvars_; ++i) {
            unsigned e = m[static_cast<std::size_t>(i)];
            for (unsigned k = 0; k < e; ++k) t *= x[i];
        }
        sum += t;
    }
    return sum;
}

Expression monomial_expression(const ChartPtr& chart, const Polynomial::Monomial& m) {
    Expression prod = Expression::constant(1.0);
    bool any = false;
    for (int i = 0; i < chart->dimension(); ++i) {
        unsigned e = m[static_cast<std::size_t>(i)];
        if (e == 0) continue;
        Expression f = e == 1 ? Expression::coordinate(chart, i)
                              : pow(Expression::coordinate(chart, i), static_cast<double>(e));
        prod = any ? prod * f : f;
        any = true;
    }
    return prod;
}

Expression Polynomial::to_expression(const ChartPtr& chart) const {
    Expression sum = Expression::constant(0.0);
    bool any = false;
    for (const auto& [m, c] : terms_) {
        Expression t = Expression::constant(c) * monomial_expression(chart, m);
        sum = any ? sum + t : t;
        any = true;
    }
    if (!any) return simplify(Expression::constant(0.0) * Expression::coordinate(chart, 0));
    return simplify(sum);
}

namespace {

std::optional<Polynomial> pow_int(const Polynomial& base, int e, int cap) {
    Polynomial acc = Polynomial::constant(base.nvars(), 1.0);
    for (int k = 0; k < e; ++k) {
        acc = acc * base;
        if (acc.total_degree() > cap) return std::nullopt;
    }
    return acc;
}

std::optional<Polynomial> convert(const Expression& e, int nvars, int cap) {
    switch (e.op()) {
        case ExprOp::Constant: return Polynomial::constant(nvars, e.constant_value());
        case ExprOp::Coord: return Polynomial::variable(nvars, e.coord_index());
        case ExprOp::Neg: {
            auto a = convert(e.child(0), nvars, cap);
            if (!a) return std::nullopt;
            return *a * -1.0;
        }
        case ExprOp::Add: {
            auto a = convert(e.child(0), nvars, cap);
            auto b = convert(e.child(1), nvars, cap);
            if (!a || !b) return std::nullopt;
            return *a + *b;
        }
        case ExprOp::Sub: {
            auto a = convert(e.child(0), nvars, cap);
            auto b = convert(e.child(1), nvars, cap);
            if (!a || !b) return std::nullopt;
            return *a - *b;
        }
        case ExprOp::Mul: {
            auto a = convert(e.child(0), nvars, cap);
            auto b = convert(e.child(1), nvars, cap);
            if (!a || !b) return std::nullopt;
            Polynomial p = *a * *b;
            if (p.total_degree() > cap) return std::nullopt;
            return p;
        }
        case ExprOp::Div: {
            Expression d = e.child(1);
            if (!d.is_constant() || d.constant_value() == 0.0) return std::nullopt;
            auto a = convert(e.child(0), nvars, cap);
            if (!a) return std::nullopt;
            return *a * (1.0 / d.constant_value());
        }
        case ExprOp::Pow: {
            double p = e.exponent();
            if (p != std::round(p) || p < 0.0 || p > 64.0) return std::nullopt;
            auto a = convert(e.child(0), nvars, cap);
            if (!a) return std::nullopt;
            return pow_int(*a, static_cast<int>(p), cap);
        }
        default: return std::nullopt;
    }
}

} // namespace

std::optional<Polynomial> to_polynomial(const Expression& e, int nvars, int max_total_degree) {
    return convert(e, nvars, max_total_degree);
}

std::vector<Polynomial::Monomial> monomials_up_to_degree(int nvars, int degree) {
    std::vector<Polynomial::Monomial> out;
    Polynomial::Monomial current(static_cast<std::size_t>(nvars), 0u);
    // Graded order: degree 0, then 1, ... each degree enumerated recursively.
    for (int d = 0; d <= degree; ++d) {
        std::vector<Polynomial::Monomial> level;
        std::function<void(int, int)> rec = [&](int var, int remaining) {
            if (var == nvars - 1) {
                current[static_cast<std::size_t>(var)] = static_cast<unsigned>(remaining);
                level.push_back(current);
                return;
            }
            for (int k = remaining; k >= 0; --k) {
                current[static_cast<std::size_t>(var)] = static_cast<unsigned>(k);
                rec(var + 1, remaining - k);
            }
        };
        if (nvars == 0) break;
        rec(0, d);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

} // namespace preduce
