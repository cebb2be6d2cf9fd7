#include "preduce/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <unordered_map>
#include <unordered_set>

namespace preduce {

namespace {

const char* const kFunctionNames[] = {"sin", "cos", "exp", "ln", "sqrt"};

bool is_function_name(std::string_view s) {
    for (const char* f : kFunctionNames)
        if (s == f) return true;
    return false;
}

bool valid_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xff;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t double_bits(double v) {
    std::uint64_t b;
    static_assert(sizeof(b) == sizeof(v));
    std::memcpy(&b, &v, sizeof(b));
    return b;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// Chart / Point

Chart::Chart(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw StructureError("chart must have at least one coordinate");
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (!valid_identifier(n))
            throw StructureError("invalid coordinate name '" + n + "'");
        if (is_function_name(n))
            throw StructureError("coordinate name '" + n + "' collides with a function name");
        if (!seen.insert(n).second)
            throw StructureError("duplicate coordinate name '" + n + "'");
    }
}

int Chart::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

ChartPtr make_chart(std::vector<std::string> names) {
    return std::make_shared<const Chart>(std::move(names));
}

Point::Point(ChartPtr c, Eigen::VectorXd x) : chart(std::move(c)), coords(std::move(x)) {
    if (!chart) throw StructureError("point requires a chart");
    if (coords.size() != chart->dimension())
        throw StructureError("point has " + std::to_string(coords.size()) + " coordinates, chart has " +
                             std::to_string(chart->dimension()));
}

// ---------------------------------------------------------------------------
// Expression nodes

struct Expression::Node {
    ExprOp op;
    double value = 0.0; // Constant value, or Pow exponent
    int index = -1;     // Coord index
    NodePtr a, b;
    std::uint64_t hash = 0;
    int count = 1;

    static NodePtr constant(double v) {
        auto n = std::make_shared<Node>();
        n->op = ExprOp::Constant;
        n->value = v;
        n->hash = fnv1a(fnv1a(14695981039346656037ull, 1), double_bits(v));
        return n;
    }
    static NodePtr coord(int i) {
        auto n = std::make_shared<Node>();
        n->op = ExprOp::Coord;
        n->index = i;
        n->hash = fnv1a(fnv1a(14695981039346656037ull, 2), static_cast<std::uint64_t>(i));
        return n;
    }
    static NodePtr unary(ExprOp op, NodePtr a) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->a = std::move(a);
        n->hash = fnv1a(fnv1a(14695981039346656037ull, 16 + static_cast<std::uint64_t>(op)), n->a->hash);
        n->count = 1 + n->a->count;
        return n;
    }
    static NodePtr binary(ExprOp op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        n->hash = fnv1a(fnv1a(fnv1a(14695981039346656037ull, 32 + static_cast<std::uint64_t>(op)), n->a->hash),
                        n->b->hash);
        n->count = 1 + n->a->count + n->b->count;
        return n;
    }
    static NodePtr power(NodePtr base, double e) {
        auto n = std::make_shared<Node>();
        n->op = ExprOp::Pow;
        n->value = e;
        n->a = std::move(base);
        n->hash = fnv1a(fnv1a(fnv1a(14695981039346656037ull, 7), n->a->hash), double_bits(e));
        n->count = 1 + n->a->count;
        return n;
    }
};

// Internal node-level helpers shared by functions in this TU.
struct ExprAccess {
    static const Expression::Node* node(const Expression& e) { return e.node_.get(); }
    static const Expression::NodePtr& node_ptr(const Expression& e) { return e.node_; }
    static Expression wrap(Expression::NodePtr n, ChartPtr c) { return Expression(std::move(n), std::move(c)); }
};

namespace {

ChartPtr merge_charts(const ChartPtr& a, const ChartPtr& b) {
    if (!a) return b;
    if (!b) return a;
    if (a == b || *a == *b) return a;
    throw ChartMismatchError("expressions over different charts cannot be combined");
}

} // namespace

Expression::Expression() : Expression(0.0) {}

Expression::Expression(double value) : node_(Node::constant(value)), chart_(nullptr) {}

Expression::Expression(NodePtr node, ChartPtr chart) : node_(std::move(node)), chart_(std::move(chart)) {}

Expression Expression::constant(double value) { return Expression(value); }

Expression Expression::coordinate(ChartPtr chart, int index) {
    if (!chart) throw StructureError("coordinate requires a chart");
    if (index < 0 || index >= chart->dimension())
        throw StructureError("coordinate index " + std::to_string(index) + " out of range for chart of dimension " +
                             std::to_string(chart->dimension()));
    return Expression(Node::coord(index), std::move(chart));
}

ExprOp Expression::op() const { return node_->op; }

bool Expression::is_constant(double value) const {
    return node_->op == ExprOp::Constant && node_->value == value;
}

double Expression::constant_value() const { return node_->value; }
int Expression::coord_index() const { return node_->index; }
double Expression::exponent() const { return node_->value; }

Expression Expression::child(int i) const {
    return Expression(i == 0 ? node_->a : node_->b, chart_);
}

std::uint64_t Expression::hash() const { return node_->hash; }
int Expression::node_count() const { return node_->count; }

Expression make_unary(ExprOp op, const Expression& a) {
    return Expression(Expression::Node::unary(op, a.node_), a.chart_);
}

Expression make_binary(ExprOp op, const Expression& a, const Expression& b) {
    return Expression(Expression::Node::binary(op, a.node_, b.node_), merge_charts(a.chart_, b.chart_));
}

Expression operator+(const Expression& a, const Expression& b) { return make_binary(ExprOp::Add, a, b); }
Expression operator-(const Expression& a, const Expression& b) { return make_binary(ExprOp::Sub, a, b); }
Expression operator*(const Expression& a, const Expression& b) { return make_binary(ExprOp::Mul, a, b); }
Expression operator/(const Expression& a, const Expression& b) { return make_binary(ExprOp::Div, a, b); }
Expression operator-(const Expression& a) { return make_unary(ExprOp::Neg, a); }

Expression pow(const Expression& base, double exponent) {
    return Expression(Expression::Node::power(ExprAccess::node_ptr(base), exponent), base.chart());
}

Expression sin(const Expression& a) { return make_unary(ExprOp::Sin, a); }
Expression cos(const Expression& a) { return make_unary(ExprOp::Cos, a); }
Expression exp(const Expression& a) { return make_unary(ExprOp::Exp, a); }
Expression ln(const Expression& a) { return make_unary(ExprOp::Ln, a); }
Expression sqrt(const Expression& a) { return make_unary(ExprOp::Sqrt, a); }

std::vector<Expression> coordinates(const ChartPtr& chart) {
    std::vector<Expression> xs;
    xs.reserve(static_cast<std::size_t>(chart->dimension()));
    for (int i = 0; i < chart->dimension(); ++i) xs.push_back(Expression::coordinate(chart, i));
    return xs;
}

// ---------------------------------------------------------------------------
// Structural order

namespace {

int compare_nodes(const Expression::Node* a, const Expression::Node* b) {
    if (a == b) return 0;
    if (a->op != b->op) return a->op < b->op ? -1 : 1;
    switch (a->op) {
        case ExprOp::Constant:
            if (a->value != b->value) return a->value < b->value ? -1 : 1;
            return 0;
        case ExprOp::Coord:
            if (a->index != b->index) return a->index < b->index ? -1 : 1;
            return 0;
        case ExprOp::Pow: {
            int c = compare_nodes(a->a.get(), b->a.get());
            if (c != 0) return c;
            if (a->value != b->value) return a->value < b->value ? -1 : 1;
            return 0;
        }
        case ExprOp::Neg:
        case ExprOp::Sin:
        case ExprOp::Cos:
        case ExprOp::Exp:
        case ExprOp::Ln:
        case ExprOp::Sqrt:
            return compare_nodes(a->a.get(), b->a.get());
        default: {
            if (a->hash != b->hash) return a->hash < b->hash ? -1 : 1; // cheap early out for big trees
            int c = compare_nodes(a->a.get(), b->a.get());
            if (c != 0) return c;
            return compare_nodes(a->b.get(), b->b.get());
        }
    }
}

} // namespace

int compare(const Expression& a, const Expression& b) {
    return compare_nodes(ExprAccess::node(a), ExprAccess::node(b));
}

bool identical(const Expression& a, const Expression& b) {
    if (a.hash() != b.hash()) return false;
    return compare(a, b) == 0;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::string node_snippet(const Expression::Node* n, const Chart* chart);

[[noreturn]] void domain_error(const char* what, const Expression::Node* n, const Chart* chart) {
    throw EvalError(std::string(what) + " in '" + node_snippet(n, chart) + "'");
}

double eval_node(const Expression::Node* n, const Eigen::VectorXd& x, const Chart* chart) {
    switch (n->op) {
        case ExprOp::Constant: return n->value;
        case ExprOp::Coord:
            if (n->index >= x.size()) domain_error("coordinate index out of range", n, chart);
            return x[n->index];
        case ExprOp::Neg: return -eval_node(n->a.get(), x, chart);
        case ExprOp::Sin: return std::sin(eval_node(n->a.get(), x, chart));
        case ExprOp::Cos: return std::cos(eval_node(n->a.get(), x, chart));
        case ExprOp::Exp: return std::exp(eval_node(n->a.get(), x, chart));
        case ExprOp::Ln: {
            double v = eval_node(n->a.get(), x, chart);
            if (v <= 0.0) domain_error("ln of nonpositive argument", n, chart);
            return std::log(v);
        }
        case ExprOp::Sqrt: {
            double v = eval_node(n->a.get(), x, chart);
            if (v < 0.0) domain_error("sqrt of negative argument", n, chart);
            return std::sqrt(v);
        }
        case ExprOp::Add: return eval_node(n->a.get(), x, chart) + eval_node(n->b.get(), x, chart);
        case ExprOp::Sub: return eval_node(n->a.get(), x, chart) - eval_node(n->b.get(), x, chart);
        case ExprOp::Mul: return eval_node(n->a.get(), x, chart) * eval_node(n->b.get(), x, chart);
        case ExprOp::Div: {
            double num = eval_node(n->a.get(), x, chart);
            double den = eval_node(n->b.get(), x, chart);
            if (den == 0.0) domain_error("division by zero", n, chart);
            return num / den;
        }
        case ExprOp::Pow: {
            double base = eval_node(n->a.get(), x, chart);
            double e = n->value;
            if (base == 0.0 && e < 0.0) domain_error("zero raised to a negative power", n, chart);
            if (base < 0.0 && e != std::round(e)) domain_error("negative base with non-integer exponent", n, chart);
            return std::pow(base, e);
        }
    }
    throw EvalError("corrupt expression node");
}

} // namespace

double evaluate(const Expression& e, const Eigen::VectorXd& x) {
    return eval_node(ExprAccess::node(e), x, e.chart().get());
}

double evaluate(const Expression& e, const Point& z) {
    if (e.chart() && !(e.chart() == z.chart || *e.chart() == *z.chart))
        throw ChartMismatchError("expression and point belong to different charts");
    return eval_node(ExprAccess::node(e), z.coords, z.chart.get());
}

// ---------------------------------------------------------------------------
// Printing

namespace {

// Precedence levels used by the printer; larger binds tighter.
constexpr int kPrecAdd = 10;
constexpr int kPrecMul = 20;
constexpr int kPrecNeg = 30;
constexpr int kPrecPow = 40;
constexpr int kPrecAtom = 100;

int node_precedence(const Expression::Node* n) {
    switch (n->op) {
        case ExprOp::Add:
        case ExprOp::Sub: return kPrecAdd;
        case ExprOp::Mul:
        case ExprOp::Div: return kPrecMul;
        case ExprOp::Neg: return kPrecNeg;
        case ExprOp::Constant: return n->value < 0.0 ? kPrecNeg : kPrecAtom;
        case ExprOp::Pow: return kPrecPow;
        default: return kPrecAtom;
    }
}

void print_node(std::string& out, const Expression::Node* n, const Chart* chart, int min_prec) {
    int prec = node_precedence(n);
    bool parens = prec < min_prec;
    if (parens) out += '(';
    switch (n->op) {
        case ExprOp::Constant: out += format_double(n->value); break;
        case ExprOp::Coord:
            if (chart && n->index < chart->dimension())
                out += chart->name(n->index);
            else
                out += "#" + std::to_string(n->index);
            break;
        case ExprOp::Neg:
            out += '-';
            print_node(out, n->a.get(), chart, kPrecNeg + 1);
            break;
        case ExprOp::Sin:
        case ExprOp::Cos:
        case ExprOp::Exp:
        case ExprOp::Ln:
        case ExprOp::Sqrt: {
            const char* name = n->op == ExprOp::Sin   ? "sin"
                               : n->op == ExprOp::Cos ? "cos"
                               : n->op == ExprOp::Exp ? "exp"
                               : n->op == ExprOp::Ln  ? "ln"
                                                      : "sqrt";
            out += name;
            out += '(';
            print_node(out, n->a.get(), chart, 0);
            out += ')';
            break;
        }
        case ExprOp::Add:
            print_node(out, n->a.get(), chart, kPrecAdd);
            out += " + ";
            print_node(out, n->b.get(), chart, kPrecAdd + 1);
            break;
        case ExprOp::Sub:
            print_node(out, n->a.get(), chart, kPrecAdd);
            out += " - ";
            print_node(out, n->b.get(), chart, kPrecAdd + 1);
            break;
        case ExprOp::Mul:
            print_node(out, n->a.get(), chart, kPrecMul);
            out += "*";
            print_node(out, n->b.get(), chart, kPrecMul + 1);
            break;
        case ExprOp::Div:
            print_node(out, n->a.get(), chart, kPrecMul);
            out += "/";
            print_node(out, n->b.get(), chart, kPrecMul + 1);
            break;
        case ExprOp::Pow:
            print_node(out, n->a.get(), chart, kPrecPow + 1);
            out += '^';
            out += format_double(n->value);
            break;
    }
    if (parens) out += ')';
}

std::string node_snippet(const Expression::Node* n, const Chart* chart) {
    std::string out;
    print_node(out, n, chart, 0);
    if (out.size() > 80) out = out.substr(0, 77) + "...";
    return out;
}

} // namespace

std::string to_string(const Expression& e) {
    std::string out;
    print_node(out, ExprAccess::node(e), e.chart().get(), 0);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
    enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End } kind;
    std::size_t pos = 0;
    double number = 0.0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        tok_.pos = pos_;
        if (pos_ >= src_.size()) {
            tok_.kind = Token::End;
            return;
        }
        char c = src_[pos_];
        switch (c) {
            case '+': tok_.kind = Token::Plus; ++pos_; return;
            case '-': tok_.kind = Token::Minus; ++pos_; return;
            case '*': tok_.kind = Token::Star; ++pos_; return;
            case '/': tok_.kind = Token::Slash; ++pos_; return;
            case '^': tok_.kind = Token::Caret; ++pos_; return;
            case '(': tok_.kind = Token::LParen; ++pos_; return;
            case ')': tok_.kind = Token::RParen; ++pos_; return;
            case ',': tok_.kind = Token::Comma; ++pos_; return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
                ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                std::size_t mark = pos_;
                ++pos_;
                if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
                if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
                } else {
                    pos_ = mark; // 'e' belongs to a following identifier, not this literal
                }
            }
            std::string text(src_.substr(start, pos_ - start));
            char* end = nullptr;
            tok_.number = std::strtod(text.c_str(), &end);
            if (end != text.c_str() + text.size())
                throw ParseError("malformed number '" + text + "'", start);
            tok_.kind = Token::Number;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            tok_.kind = Token::Ident;
            tok_.text = std::string(src_.substr(start, pos_ - start));
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_;
};

class Parser {
public:
    Parser(std::string_view src, ChartPtr chart) : lex_(src), chart_(std::move(chart)) {}

    Expression run() {
        Expression e = parse_sum();
        const Token& t = lex_.peek();
        if (t.kind != Token::End) throw ParseError("unexpected trailing input", t.pos);
        return e;
    }

private:
    Expression parse_sum() {
        Expression e = parse_term();
        while (true) {
            Token::Kind k = lex_.peek().kind;
            if (k == Token::Plus) {
                lex_.take();
                e = e + parse_term();
            } else if (k == Token::Minus) {
                lex_.take();
                e = e - parse_term();
            } else {
                return e;
            }
        }
    }

    Expression parse_term() {
        Expression e = parse_unary();
        while (true) {
            Token::Kind k = lex_.peek().kind;
            if (k == Token::Star) {
                lex_.take();
                e = e * parse_unary();
            } else if (k == Token::Slash) {
                lex_.take();
                e = e / parse_unary();
            } else {
                return e;
            }
        }
    }

    Expression parse_unary() {
        if (lex_.peek().kind == Token::Minus) {
            lex_.take();
            return -parse_unary();
        }
        return parse_power();
    }

    Expression parse_power() {
        Expression base = parse_primary();
        if (lex_.peek().kind == Token::Caret) {
            std::size_t pos = lex_.take().pos;
            Expression e = parse_unary(); // allows x^-2 and right-assoc x^2^3
            Expression folded = simplify(e);
            if (!folded.is_constant())
                throw ParseError("exponent must be a constant", pos);
            return pow(base, folded.constant_value());
        }
        return base;
    }

    Expression parse_primary() {
        Token t = lex_.take();
        switch (t.kind) {
            case Token::Number: return bind(Expression::constant(t.number));
            case Token::LParen: {
                Expression e = parse_sum();
                expect(Token::RParen, "expected ')'");
                return e;
            }
            case Token::Ident: {
                if (is_function_name(t.text)) {
                    expect(Token::LParen, "expected '(' after function name");
                    Expression arg = parse_sum();
                    expect(Token::RParen, "expected ')'");
                    if (t.text == "sin") return sin(arg);
                    if (t.text == "cos") return cos(arg);
                    if (t.text == "exp") return exp(arg);
                    if (t.text == "ln") return ln(arg);
                    return sqrt(arg);
                }
                int idx = chart_->index_of(t.text);
                if (idx < 0) throw ParseError("unknown identifier '" + t.text + "'", t.pos);
                return Expression::coordinate(chart_, idx);
            }
            default: throw ParseError("expected a number, coordinate, function, or '('", t.pos);
        }
    }

    void expect(Token::Kind kind, const char* message) {
        Token t = lex_.take();
        if (t.kind != kind) throw ParseError(message, t.pos);
    }

    // Constants produced by the grammar are still bound to the chart.
    Expression bind(const Expression& e) {
        return ExprAccess::wrap(ExprAccess::node_ptr(e), chart_);
    }

    Lexer lex_;
    ChartPtr chart_;
};

} // namespace

Expression parse(std::string_view text, ChartPtr chart) {
    if (!chart) throw StructureError("parse requires a chart");
    Parser p(text, std::move(chart));
    return p.run();
}

// ---------------------------------------------------------------------------
// Simplification

class Simplifier {
public:
    using Node = Expression::Node;
    using NodePtr = Expression::NodePtr;

    NodePtr run(const NodePtr& n) {
        auto it = memo_.find(n);
        if (it != memo_.end()) return it->second;
        NodePtr r = rewrite(n);
        memo_.emplace(n, r);
        return r;
    }

private:
    static bool is_const(const NodePtr& n, double v) { return n->op == ExprOp::Constant && n->value == v; }
    static bool is_const(const NodePtr& n) { return n->op == ExprOp::Constant; }

    // (coefficient, core) with the constant multiplier factored out.
    static std::pair<double, NodePtr> split_coefficient(const NodePtr& n) {
        if (n->op == ExprOp::Constant) return {n->value, nullptr};
        if (n->op == ExprOp::Neg) {
            auto [c, core] = split_coefficient(n->a);
            return {-c, core};
        }
        if (n->op == ExprOp::Mul) {
            if (is_const(n->a)) return {n->a->value, n->b};
            if (is_const(n->b)) return {n->b->value, n->a};
        }
        return {1.0, n};
    }

    void collect_sum(const NodePtr& n, double sign, double& constant,
                     std::vector<std::pair<NodePtr, double>>& terms) {
        NodePtr s = run(n);
        if (s->op == ExprOp::Add) {
            collect_sum_raw(s->a, sign, constant, terms);
            collect_sum_raw(s->b, sign, constant, terms);
            return;
        }
        if (s->op == ExprOp::Sub) {
            collect_sum_raw(s->a, sign, constant, terms);
            collect_sum_raw(s->b, -sign, constant, terms);
            return;
        }
        collect_leaf(s, sign, constant, terms);
    }

    // Children of an already-simplified sum are themselves simplified.
    void collect_sum_raw(const NodePtr& s, double sign, double& constant,
                         std::vector<std::pair<NodePtr, double>>& terms) {
        if (s->op == ExprOp::Add) {
            collect_sum_raw(s->a, sign, constant, terms);
            collect_sum_raw(s->b, sign, constant, terms);
        } else if (s->op == ExprOp::Sub) {
            collect_sum_raw(s->a, sign, constant, terms);
            collect_sum_raw(s->b, -sign, constant, terms);
        } else {
            collect_leaf(s, sign, constant, terms);
        }
    }

    void collect_leaf(const NodePtr& s, double sign, double& constant,
                      std::vector<std::pair<NodePtr, double>>& terms) {
        auto [coef, core] = split_coefficient(s);
        if (!core) {
            constant += sign * coef;
            return;
        }
        double c = sign * coef;
        for (auto& t : terms) {
            if (t.first->hash == core->hash && compare_nodes(t.first.get(), core.get()) == 0) {
                t.second += c;
                return;
            }
        }
        terms.emplace_back(core, c);
    }

    NodePtr rebuild_sum(double constant, std::vector<std::pair<NodePtr, double>>& terms) {
        std::sort(terms.begin(), terms.end(), [](const auto& x, const auto& y) {
            return compare_nodes(x.first.get(), y.first.get()) < 0;
        });
        NodePtr acc;
        bool have = false;
        auto append = [&](const NodePtr& t, double coef) {
            if (coef == 0.0) return;
            NodePtr piece;
            double mag = std::abs(coef);
            if (mag == 1.0)
                piece = t;
            else
                piece = Node::binary(ExprOp::Mul, Node::constant(mag), t);
            if (!have) {
                acc = coef < 0.0 ? Node::unary(ExprOp::Neg, piece) : piece;
                have = true;
            } else {
                acc = Node::binary(coef < 0.0 ? ExprOp::Sub : ExprOp::Add, acc, piece);
            }
        };
        if (constant != 0.0) {
            acc = Node::constant(constant);
            have = true;
        }
        for (auto& [t, c] : terms) append(t, c);
        if (!have) return Node::constant(0.0);
        return acc;
    }

    // Factors of a product as (base, exponent) pairs with constants folded out.
    void collect_product(const NodePtr& s, double& constant, std::vector<std::pair<NodePtr, double>>& factors) {
        if (s->op == ExprOp::Mul) {
            collect_product(s->a, constant, factors);
            collect_product(s->b, constant, factors);
            return;
        }
        if (s->op == ExprOp::Neg) {
            constant = -constant;
            collect_product(s->a, constant, factors);
            return;
        }
        if (s->op == ExprOp::Constant) {
            constant *= s->value;
            return;
        }
        NodePtr base = s;
        double e = 1.0;
        if (s->op == ExprOp::Pow) {
            base = s->a;
            e = s->value;
        }
        for (auto& f : factors) {
            if (f.first->hash == base->hash && compare_nodes(f.first.get(), base.get()) == 0) {
                f.second += e;
                return;
            }
        }
        factors.emplace_back(base, e);
    }

    NodePtr rebuild_product(double constant, std::vector<std::pair<NodePtr, double>>& factors) {
        if (constant == 0.0) return Node::constant(0.0);
        std::sort(factors.begin(), factors.end(), [](const auto& x, const auto& y) {
            return compare_nodes(x.first.get(), y.first.get()) < 0;
        });
        NodePtr acc;
        for (auto& [base, e] : factors) {
            if (e == 0.0) continue;
            NodePtr piece = e == 1.0 ? base : Node::power(base, e);
            acc = acc ? Node::binary(ExprOp::Mul, acc, piece) : piece;
        }
        if (!acc) return Node::constant(constant);
        if (constant == 1.0) return acc;
        if (constant == -1.0) return Node::unary(ExprOp::Neg, acc);
        return Node::binary(ExprOp::Mul, Node::constant(constant), acc);
    }

    NodePtr rewrite(const NodePtr& n) {
        switch (n->op) {
            case ExprOp::Constant:
            case ExprOp::Coord: return n;
            case ExprOp::Neg: {
                NodePtr a = run(n->a);
                if (a->op == ExprOp::Constant) return Node::constant(-a->value);
                if (a->op == ExprOp::Neg) return a->a;
                return Node::unary(ExprOp::Neg, a);
            }
            case ExprOp::Sin:
            case ExprOp::Cos:
            case ExprOp::Exp:
            case ExprOp::Ln:
            case ExprOp::Sqrt: {
                NodePtr a = run(n->a);
                if (a->op == ExprOp::Constant) {
                    double v = a->value;
                    double r = 0.0;
                    bool ok = true;
                    switch (n->op) {
                        case ExprOp::Sin: r = std::sin(v); break;
                        case ExprOp::Cos: r = std::cos(v); break;
                        case ExprOp::Exp: r = std::exp(v); break;
                        case ExprOp::Ln:
                            ok = v > 0.0;
                            if (ok) r = std::log(v);
                            break;
                        default:
                            ok = v >= 0.0;
                            if (ok) r = std::sqrt(v);
                            break;
                    }
                    if (ok && std::isfinite(r)) return Node::constant(r);
                }
                return Node::unary(n->op, a);
            }
            case ExprOp::Pow: {
                NodePtr a = run(n->a);
                double e = n->value;
                if (e == 0.0) return Node::constant(1.0);
                if (e == 1.0) return a;
                if (a->op == ExprOp::Constant) {
                    double base = a->value;
                    bool ok = !(base == 0.0 && e < 0.0) && !(base < 0.0 && e != std::round(e));
                    if (ok) {
                        double r = std::pow(base, e);
                        if (std::isfinite(r)) return Node::constant(r);
                    }
                }
                if (a->op == ExprOp::Pow && a->value == std::round(a->value) && e == std::round(e))
                    return run(Node::power(a->a, a->value * e));
                return Node::power(a, e);
            }
            case ExprOp::Add:
            case ExprOp::Sub: {
                double constant = 0.0;
                std::vector<std::pair<NodePtr, double>> terms;
                collect_sum(n->a, 1.0, constant, terms);
                collect_sum(n->b, n->op == ExprOp::Add ? 1.0 : -1.0, constant, terms);
                return rebuild_sum(constant, terms);
            }
            case ExprOp::Mul: {
                NodePtr a = run(n->a);
                NodePtr b = run(n->b);
                double constant = 1.0;
                std::vector<std::pair<NodePtr, double>> factors;
                collect_product(a, constant, factors);
                collect_product(b, constant, factors);
                return rebuild_product(constant, factors);
            }
            case ExprOp::Div: {
                NodePtr a = run(n->a);
                NodePtr b = run(n->b);
                if (is_const(a, 0.0)) return a;
                if (is_const(b, 1.0)) return a;
                if (b->op == ExprOp::Constant && b->value != 0.0) {
                    if (a->op == ExprOp::Constant) return Node::constant(a->value / b->value);
                    return run(Node::binary(ExprOp::Mul, Node::constant(1.0 / b->value), a));
                }
                if (a->hash == b->hash && compare_nodes(a.get(), b.get()) == 0) return Node::constant(1.0);
                return Node::binary(ExprOp::Div, a, b);
            }
        }
        return n;
    }

    // Keyed by the owning pointer: memo keys must stay alive, or a
    // freed node's address can be reused and alias a stale entry.
    std::unordered_map<NodePtr, NodePtr> memo_;
};

Expression simplify(const Expression& e) {
    Simplifier s;
    return ExprAccess::wrap(s.run(ExprAccess::node_ptr(e)), e.chart());
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

Expression diff_node(const Expression& e, int index) {
    switch (e.op()) {
        case ExprOp::Constant: return Expression::constant(0.0);
        case ExprOp::Coord: return Expression::constant(e.coord_index() == index ? 1.0 : 0.0);
        case ExprOp::Neg: return -diff_node(e.child(0), index);
        case ExprOp::Sin: return cos(e.child(0)) * diff_node(e.child(0), index);
        case ExprOp::Cos: return -(sin(e.child(0)) * diff_node(e.child(0), index));
        case ExprOp::Exp: return exp(e.child(0)) * diff_node(e.child(0), index);
        case ExprOp::Ln: return diff_node(e.child(0), index) / e.child(0);
        case ExprOp::Sqrt: return diff_node(e.child(0), index) / (Expression::constant(2.0) * sqrt(e.child(0)));
        case ExprOp::Add: return diff_node(e.child(0), index) + diff_node(e.child(1), index);
        case ExprOp::Sub: return diff_node(e.child(0), index) - diff_node(e.child(1), index);
        case ExprOp::Mul:
            return diff_node(e.child(0), index) * e.child(1) + e.child(0) * diff_node(e.child(1), index);
        case ExprOp::Div: {
            Expression u = e.child(0), v = e.child(1);
            return (diff_node(u, index) * v - u * diff_node(v, index)) / (v * v);
        }
        case ExprOp::Pow: {
            double p = e.exponent();
            if (p == 0.0) return Expression::constant(0.0);
            return Expression::constant(p) * pow(e.child(0), p - 1.0) * diff_node(e.child(0), index);
        }
    }
    throw EvalError("corrupt expression node");
}

} // namespace

Expression differentiate(const Expression& e, int index) {
    if (index < 0 || (e.chart() && index >= e.chart()->dimension()))
        throw StructureError("differentiation index out of range");
    Expression d = simplify(diff_node(e, index));
    if (e.chart() && !d.chart()) d = ExprAccess::wrap(ExprAccess::node_ptr(d), e.chart());
    return d;
}

std::vector<Expression> gradient(const Expression& e) {
    if (!e.chart()) throw StructureError("gradient requires a chart-bound expression");
    return gradient(e, e.chart());
}

std::vector<Expression> gradient(const Expression& e, const ChartPtr& chart) {
    if (e.chart() && !(e.chart() == chart || *e.chart() == *chart))
        throw ChartMismatchError("gradient chart differs from the expression's chart");
    std::vector<Expression> g;
    g.reserve(static_cast<std::size_t>(chart->dimension()));
    for (int i = 0; i < chart->dimension(); ++i) {
        Expression d = differentiate(e, i);
        g.push_back(ExprAccess::wrap(ExprAccess::node_ptr(d), chart));
    }
    return g;
}

// ---------------------------------------------------------------------------
// Composition / reindexing

namespace {

Expression substitute(const Expression& e, const std::vector<Expression>& components, const ChartPtr& chart) {
    switch (e.op()) {
        case ExprOp::Constant: return ExprAccess::wrap(ExprAccess::node_ptr(e), chart);
        case ExprOp::Coord: {
            int i = e.coord_index();
            if (i >= static_cast<int>(components.size()))
                throw StructureError("composition component missing for coordinate " + std::to_string(i));
            return components[static_cast<std::size_t>(i)];
        }
        case ExprOp::Neg: return -substitute(e.child(0), components, chart);
        case ExprOp::Sin: return sin(substitute(e.child(0), components, chart));
        case ExprOp::Cos: return cos(substitute(e.child(0), components, chart));
        case ExprOp::Exp: return exp(substitute(e.child(0), components, chart));
        case ExprOp::Ln: return ln(substitute(e.child(0), components, chart));
        case ExprOp::Sqrt: return sqrt(substitute(e.child(0), components, chart));
        case ExprOp::Add: return substitute(e.child(0), components, chart) + substitute(e.child(1), components, chart);
        case ExprOp::Sub: return substitute(e.child(0), components, chart) - substitute(e.child(1), components, chart);
        case ExprOp::Mul: return substitute(e.child(0), components, chart) * substitute(e.child(1), components, chart);
        case ExprOp::Div: return substitute(e.child(0), components, chart) / substitute(e.child(1), components, chart);
        case ExprOp::Pow: return pow(substitute(e.child(0), components, chart), e.exponent());
    }
    throw EvalError("corrupt expression node");
}

} // namespace

Expression compose(const Expression& f, const std::vector<Expression>& components, const ChartPtr& source_chart) {
    for (const auto& c : components)
        if (c.chart() && !(c.chart() == source_chart || *c.chart() == *source_chart))
            throw ChartMismatchError("composition component over a different chart");
    return substitute(f, components, source_chart);
}

Expression reindex(const Expression& e, int offset, const ChartPtr& new_chart) {
    std::vector<Expression> components;
    int n = e.chart() ? e.chart()->dimension() : 0;
    components.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) components.push_back(Expression::coordinate(new_chart, i + offset));
    return substitute(e, components, new_chart);
}

} // namespace preduce
