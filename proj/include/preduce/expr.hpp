#ifndef PREDUCE_EXPR_HPP
#define PREDUCE_EXPR_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "preduce/common.hpp"

namespace preduce {

/// An ordered list of coordinate names. Immutable after construction;
/// share via ChartPtr.
class Chart {
public:
    explicit Chart(std::vector<std::string> names);

    int dimension() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(int i) const { return names_.at(static_cast<std::size_t>(i)); }
    /// Index of `name`, or -1 if the chart has no such coordinate.
    int index_of(std::string_view name) const;

    bool operator==(const Chart& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
};

using ChartPtr = std::shared_ptr<const Chart>;

ChartPtr make_chart(std::vector<std::string> names);

/// A point of a chart: coordinate values in chart order.
struct Point {
    ChartPtr chart;
    Eigen::VectorXd coords;

    Point() = default;
    Point(ChartPtr c, Eigen::VectorXd x);
};

enum class ExprOp : std::uint8_t {
    Constant,
    Coord,
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Add,
    Sub,
    Mul,
    Div,
    Pow, // exponent is a stored constant
};

/// Immutable symbolic scalar function of the coordinates of a chart.
///
/// Nodes are shared and never mutated, so Expressions are cheap to copy
/// and safe to read from multiple threads. Constants may be chart-free;
/// an expression acquires a chart as soon as it references a coordinate
/// or is combined with a chart-bound expression.
class Expression {
public:
    /// The constant 0.
    Expression();
    /// Implicit constant.
    Expression(double value); // NOLINT(google-explicit-constructor)

    static Expression constant(double value);
    static Expression coordinate(ChartPtr chart, int index);

    struct Node; // definition private to the implementation
    using NodePtr = std::shared_ptr<const Node>;

    ExprOp op() const;
    bool is_constant() const { return op() == ExprOp::Constant; }
    /// True iff this is the literal constant `value`.
    bool is_constant(double value) const;
    double constant_value() const; // requires Constant
    int coord_index() const;       // requires Coord
    double exponent() const;       // requires Pow
    Expression child(int i) const; // 0 = first/only operand, 1 = second
    const ChartPtr& chart() const { return chart_; }
    std::uint64_t hash() const;
    int node_count() const;

private:
    Expression(NodePtr node, ChartPtr chart);

    NodePtr node_;
    ChartPtr chart_;

    friend Expression make_unary(ExprOp op, const Expression& a);
    friend Expression make_binary(ExprOp op, const Expression& a, const Expression& b);
    friend Expression pow(const Expression& base, double exponent);
    friend int compare(const Expression& a, const Expression& b);
    friend class Simplifier;
    friend class Evaluator;
    friend struct ExprAccess;
};

// Arithmetic. Mixing two charts throws ChartMismatchError; constants
// combine with anything.
Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);

Expression pow(const Expression& base, double exponent);
Expression sin(const Expression& a);
Expression cos(const Expression& a);
Expression exp(const Expression& a);
Expression ln(const Expression& a);
Expression sqrt(const Expression& a);

/// Total structural order: 0 iff structurally identical.
int compare(const Expression& a, const Expression& b);
bool identical(const Expression& a, const Expression& b);

/// Parse `text` against the grammar documented in the README (infix
/// arithmetic, ^ with constant exponent, sin|cos|exp|ln|sqrt, chart
/// coordinate names). The result is bound to `chart` even when constant.
Expression parse(std::string_view text, ChartPtr chart);

/// Grammar-compatible rendering; parse(to_string(e), e.chart()) evaluates
/// identically to e. Constants use 17 significant digits.
std::string to_string(const Expression& e);

/// Exact symbolic partial derivative with respect to coordinate `index`.
/// The result is simplified.
Expression differentiate(const Expression& e, int index);

/// All n partials, in chart order. Requires a chart-bound expression
/// (use the two-argument overload for chart-free constants).
std::vector<Expression> gradient(const Expression& e);
std::vector<Expression> gradient(const Expression& e, const ChartPtr& chart);

double evaluate(const Expression& e, const Point& z);
/// Fast path without a chart check; `x` must have the chart's dimension.
double evaluate(const Expression& e, const Eigen::VectorXd& x);

/// Best-effort semantics-preserving rewrite: constant folding, 0/1
/// identities, like-term collection in sums, factor collection in
/// products, canonical commutative ordering.
Expression simplify(const Expression& e);

/// Substitute coordinate i of f's chart by components[i]; the result is
/// an expression over `source_chart` (which every component must match).
Expression compose(const Expression& f, const std::vector<Expression>& components,
                   const ChartPtr& source_chart);

/// Rebind coordinate indices i -> i + offset over a larger chart.
Expression reindex(const Expression& e, int offset, const ChartPtr& new_chart);

/// Coordinate expressions x^0..x^{n-1} of a chart.
std::vector<Expression> coordinates(const ChartPtr& chart);

} // namespace preduce

#endif
