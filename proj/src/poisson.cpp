#include "preduce/poisson.hpp"

#include <algorithm>
#include <cmath>

#include "preduce/linalg.hpp"
#include "preduce/polynomial.hpp"

namespace preduce {

namespace {

void require_same_chart(const ChartPtr& a, const ChartPtr& b, const char* what) {
    if (!a || !b || !(a == b || *a == *b)) throw ChartMismatchError(what);
}

void require_compatible(const ChartPtr& chart, const Expression& e, const char* what) {
    if (e.chart() && !(e.chart() == chart || *e.chart() == *chart)) throw ChartMismatchError(what);
}

} // namespace

// ---------------------------------------------------------------------------
// VectorFieldExpr / SmoothMap

VectorFieldExpr::VectorFieldExpr(ChartPtr c, std::vector<Expression> comps)
    : chart(std::move(c)), components(std::move(comps)) {
    if (!chart) throw StructureError("vector field requires a chart");
    if (static_cast<int>(components.size()) != chart->dimension())
        throw StructureError("vector field component count differs from chart dimension");
    for (const auto& e : components) require_compatible(chart, e, "vector field component over a different chart");
}

Eigen::VectorXd VectorFieldExpr::evaluate(const Eigen::VectorXd& x) const {
    Eigen::VectorXd v(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) v[static_cast<Eigen::Index>(i)] = preduce::evaluate(components[i], x);
    return v;
}

SmoothMap::SmoothMap(ChartPtr source, ChartPtr target, std::vector<Expression> components)
    : source_(std::move(source)), target_(std::move(target)), components_(std::move(components)) {
    if (!source_ || !target_) throw StructureError("smooth map requires source and target charts");
    if (static_cast<int>(components_.size()) != target_->dimension())
        throw StructureError("smooth map component count differs from target dimension");
    for (const auto& e : components_) require_compatible(source_, e, "smooth map component over a different chart");
    jacobian_entries_.reserve(components_.size());
    for (const auto& e : components_) jacobian_entries_.push_back(gradient(e, source_));
}

Eigen::VectorXd SmoothMap::apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(target_->dimension());
    for (int a = 0; a < target_->dimension(); ++a) y[a] = evaluate(components_[static_cast<std::size_t>(a)], x);
    return y;
}

Eigen::MatrixXd SmoothMap::jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd J(target_->dimension(), source_->dimension());
    for (int a = 0; a < target_->dimension(); ++a)
        for (int i = 0; i < source_->dimension(); ++i)
            J(a, i) = evaluate(jacobian_entries_[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)], x);
    return J;
}

Expression SmoothMap::pullback(const Expression& f) const {
    require_compatible(target_, f, "pullback of a function over a different chart");
    return simplify(compose(f, components_, source_));
}

SmoothMap SmoothMap::identity(const ChartPtr& chart) {
    return SmoothMap(chart, chart, coordinates(chart));
}

// ---------------------------------------------------------------------------
// PoissonStructure

PoissonStructure::PoissonStructure(ChartPtr chart, std::vector<std::vector<Expression>> entries,
                                   PoissonOptions options)
    : chart_(std::move(chart)), entries_(std::move(entries)), options_(options) {
    validate();
}

PoissonStructure PoissonStructure::from_upper_triangle(
    ChartPtr chart, const std::vector<std::tuple<int, int, Expression>>& upper, PoissonOptions options) {
    const int n = chart->dimension();
    std::vector<std::vector<Expression>> entries(
        static_cast<std::size_t>(n), std::vector<Expression>(static_cast<std::size_t>(n), Expression(0.0)));
    for (const auto& [i, j, e] : upper) {
        if (i < 0 || j < 0 || i >= n || j >= n || i >= j)
            throw StructureError("upper-triangle entry must have 0 <= i < j < n");
        entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = e;
        entries[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = simplify(-e);
    }
    return PoissonStructure(std::move(chart), std::move(entries), options);
}

const Expression& PoissonStructure::entry(int i, int j) const {
    return entries_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
}

Eigen::MatrixXd PoissonStructure::tensor_at(const Eigen::VectorXd& x) const {
    const int n = dimension();
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = evaluate(entry(i, j), x);
    return B;
}

const Expression& PoissonStructure::entry_derivative(int l, int j, int k) const {
    const int n = dimension();
    return entry_derivs_[static_cast<std::size_t>((l * n + j) * n + k)];
}

void PoissonStructure::validate() {
    const int n = chart_ ? chart_->dimension() : 0;
    if (!chart_) throw StructureError("Poisson structure requires a chart");
    if (static_cast<int>(entries_.size()) != n)
        throw StructureError("Poisson tensor must be a full n x n matrix of expressions");
    for (auto& row : entries_) {
        if (static_cast<int>(row.size()) != n)
            throw StructureError("Poisson tensor must be a full n x n matrix of expressions");
        for (auto& e : row) {
            require_compatible(chart_, e, "Poisson tensor entry over a different chart");
            e = simplify(e);
        }
    }

    // Antisymmetry as an expression identity.
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            Expression sum = simplify(entry(i, j) + entry(j, i));
            if (!sum.is_constant(0.0))
                throw StructureError("Poisson tensor is not antisymmetric as an expression identity: B[" +
                                     std::to_string(i) + "][" + std::to_string(j) + "] + B[" + std::to_string(j) +
                                     "][" + std::to_string(i) + "] = " + to_string(sum));
        }
    }

    // Cache entry partials for Jacobi evaluations.
    entry_derivs_.reserve(static_cast<std::size_t>(n) * n * n);
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) entry_derivs_.push_back(differentiate(entry(j, k), l));

    // Validation points: explicit samples or a seeded box.
    std::vector<Eigen::VectorXd> points;
    if (options_.validation_samples) {
        points = *options_.validation_samples;
    } else {
        Rng rng(options_.seed);
        points = sample_box(Box::cube(n, options_.box_lo, options_.box_hi), options_.validation_points, rng);
    }

    for (const auto& z : points) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double r = std::abs(evaluate(entry(i, j), z) + evaluate(entry(j, i), z));
                if (r > options_.antisymmetry_tol)
                    throw StructureError("Poisson tensor antisymmetry fails numerically (residual " +
                                         std::to_string(r) + ")");
            }
    }

    // Jacobi identity: exact polynomial proof when the entries allow it,
    // otherwise sampled.
    bool all_poly = true;
    std::vector<std::vector<std::optional<Polynomial>>> poly(static_cast<std::size_t>(n));
    for (int i = 0; i < n && all_poly; ++i) {
        poly[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            auto p = to_polynomial(entry(i, j), n, options_.symbolic_jacobi_max_degree);
            if (!p) {
                all_poly = false;
                break;
            }
            poly[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::move(p);
        }
    }
    if (all_poly) {
        double scale = 1.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                scale = std::max(scale, poly[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]->max_abs_coefficient());
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int k = j + 1; k < n; ++k) {
                    Polynomial sum(n);
                    for (int l = 0; l < n; ++l) {
                        const auto& Bil = *poly[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
                        const auto& Bjl = *poly[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
                        const auto& Bkl = *poly[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
                        sum += Bil * poly[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]->derivative(l);
                        sum += Bjl * poly[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]->derivative(l);
                        sum += Bkl * poly[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]->derivative(l);
                    }
                    if (!sum.is_zero(1e-12 * scale))
                        throw StructureError("Jacobi identity fails (exact polynomial expansion, triple " +
                                             std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) +
                                             ")");
                }
        jacobi_symbolic_ = true;
    } else {
        for (const auto& z : points) {
            double r = jacobi_residual(*this, z);
            if (r > options_.jacobi_tol)
                throw StructureError("Jacobi identity fails numerically (residual " + std::to_string(r) + ")");
        }
    }
}

// ---------------------------------------------------------------------------
// Brackets and fields

Expression bracket(const PoissonStructure& P, const Expression& f, const Expression& g) {
    require_compatible(P.chart(), f, "bracket argument over a different chart");
    require_compatible(P.chart(), g, "bracket argument over a different chart");
    const int n = P.dimension();
    auto df = gradient(f, P.chart());
    auto dg = gradient(g, P.chart());
    Expression sum(0.0);
    bool any = false;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Expression& Bij = P.entry(i, j);
            if (Bij.is_constant(0.0)) continue;
            Expression term = Bij * (df[static_cast<std::size_t>(i)] * dg[static_cast<std::size_t>(j)] -
                                     df[static_cast<std::size_t>(j)] * dg[static_cast<std::size_t>(i)]);
            sum = any ? sum + term : term;
            any = true;
        }
    }
    Expression out = simplify(sum);
    return any ? out : simplify(Expression(0.0) * Expression::coordinate(P.chart(), 0));
}

VectorFieldExpr hamiltonian_vector_field(const PoissonStructure& P, const Expression& h) {
    require_compatible(P.chart(), h, "Hamiltonian over a different chart");
    const int n = P.dimension();
    auto dh = gradient(h, P.chart());
    std::vector<Expression> comps;
    comps.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Expression sum(0.0);
        bool any = false;
        for (int j = 0; j < n; ++j) {
            const Expression& Bij = P.entry(i, j);
            if (Bij.is_constant(0.0)) continue;
            Expression term = Bij * dh[static_cast<std::size_t>(j)];
            sum = any ? sum + term : term;
            any = true;
        }
        comps.push_back(simplify(sum));
    }
    return VectorFieldExpr(P.chart(), std::move(comps));
}

double jacobi_residual(const PoissonStructure& P, const Eigen::VectorXd& z) {
    const int n = P.dimension();
    // Evaluate entries and their partials once.
    Eigen::MatrixXd B = P.tensor_at(z);
    std::vector<Eigen::MatrixXd> dB(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) {
        dB[static_cast<std::size_t>(l)].resize(n, n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                dB[static_cast<std::size_t>(l)](j, k) = evaluate(P.entry_derivative(l, j, k), z);
    }
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                double sum = 0.0;
                for (int l = 0; l < n; ++l)
                    sum += B(i, l) * dB[static_cast<std::size_t>(l)](j, k) +
                           B(j, l) * dB[static_cast<std::size_t>(l)](k, i) +
                           B(k, l) * dB[static_cast<std::size_t>(l)](i, j);
                worst = std::max(worst, std::abs(sum));
            }
    return worst;
}

double jacobi_residual_of_entries(const ChartPtr& chart,
                                  const std::vector<std::vector<Expression>>& entries,
                                  const Eigen::VectorXd& z) {
    const int n = chart->dimension();
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = evaluate(entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], z);
    std::vector<Eigen::MatrixXd> dB(static_cast<std::size_t>(n), Eigen::MatrixXd(n, n));
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                dB[static_cast<std::size_t>(l)](j, k) =
                    evaluate(differentiate(entries[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)], l), z);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                double sum = 0.0;
                for (int l = 0; l < n; ++l)
                    sum += B(i, l) * dB[static_cast<std::size_t>(l)](j, k) +
                           B(j, l) * dB[static_cast<std::size_t>(l)](k, i) +
                           B(k, l) * dB[static_cast<std::size_t>(l)](i, j);
                worst = std::max(worst, std::abs(sum));
            }
    return worst;
}

CasimirReport is_casimir(const PoissonStructure& P, const Expression& f,
                         const std::vector<Eigen::VectorXd>& samples, double tol) {
    CasimirReport rep;
    VectorFieldExpr Xf = hamiltonian_vector_field(P, f);
    for (const auto& z : samples) {
        Eigen::VectorXd v = Xf.evaluate(z);
        int worst_i = 0;
        double r = v.cwiseAbs().maxCoeff(&worst_i);
        if (r >= rep.worst) rep.worst_coordinate = worst_i;
        rep.absorb(r, z);
    }
    rep.finalize(tol);
    return rep;
}

int characteristic_rank(const PoissonStructure& P, const Eigen::VectorXd& z) {
    return numerical_rank(P.tensor_at(z), P.options().rank_rel_tol);
}

// ---------------------------------------------------------------------------
// Canonical map checks

namespace {

std::vector<Expression> monomial_test_functions(const ChartPtr& chart, int extra, Rng& rng) {
    std::vector<Expression> fs = coordinates(chart);
    auto monos = monomials_up_to_degree(chart->dimension(), 2);
    // skip the constant monomial at index 0
    for (int k = 0; k < extra; ++k) {
        const auto& m = monos[static_cast<std::size_t>(rng.uniform_int(1, static_cast<int>(monos.size()) - 1))];
        fs.push_back(monomial_expression(chart, m));
    }
    return fs;
}

} // namespace

PoissonMapReport check_poisson_map(const SmoothMap& phi, const PoissonStructure& P1,
                                   const PoissonStructure& P2,
                                   const std::vector<Eigen::VectorXd>& samples, double tol,
                                   std::uint64_t seed) {
    require_same_chart(phi.source(), P1.chart(), "map source chart differs from the first Poisson structure");
    require_same_chart(phi.target(), P2.chart(), "map target chart differs from the second Poisson structure");

    Rng rng(seed);
    auto test_funcs = monomial_test_functions(P2.chart(), 2 * P2.dimension(), rng);

    PoissonMapReport rep;

    // Bracket pullback identity on pairs of test functions.
    for (std::size_t a = 0; a < test_funcs.size(); ++a) {
        for (std::size_t b = a + 1; b < test_funcs.size(); ++b) {
            Expression lhs = phi.pullback(bracket(P2, test_funcs[a], test_funcs[b]));
            Expression rhs = bracket(P1, phi.pullback(test_funcs[a]), phi.pullback(test_funcs[b]));
            Expression diff = simplify(lhs - rhs);
            for (const auto& z : samples) rep.bracket_check.absorb(std::abs(evaluate(diff, z)), z);
            ++rep.pairs_tested;
        }
    }
    rep.bracket_check.finalize(tol);

    // Equivalent tangent relation: T(phi) X_{h∘phi} = X_h ∘ phi.
    for (const auto& h : test_funcs) {
        VectorFieldExpr Xh2 = hamiltonian_vector_field(P2, h);
        VectorFieldExpr Xh1 = hamiltonian_vector_field(P1, phi.pullback(h));
        for (const auto& z : samples) {
            Eigen::VectorXd lhs = phi.jacobian(z) * Xh1.evaluate(z);
            Eigen::VectorXd rhs = Xh2.evaluate(phi.apply(z));
            rep.field_check.absorb((lhs - rhs).cwiseAbs().maxCoeff(), z);
        }
    }
    rep.field_check.finalize(tol);

    rep.worst = std::max(rep.bracket_check.worst, rep.field_check.worst);
    rep.witness = rep.bracket_check.worst >= rep.field_check.worst ? rep.bracket_check.witness
                                                                   : rep.field_check.witness;
    rep.finalize(tol);
    return rep;
}

PoissonMapReport check_canonical_action(const std::vector<SmoothMap>& maps, const PoissonStructure& P,
                                        const std::vector<Eigen::VectorXd>& samples, double tol,
                                        std::uint64_t seed) {
    PoissonMapReport rep;
    rep.passed = true;
    for (const auto& phi : maps) {
        require_same_chart(phi.source(), phi.target(), "action map must be a chart endomorphism");
        PoissonMapReport r = check_poisson_map(phi, P, P, samples, tol, seed);
        rep.pairs_tested += r.pairs_tested;
        if (r.bracket_check.worst >= rep.bracket_check.worst) rep.bracket_check = r.bracket_check;
        if (r.field_check.worst >= rep.field_check.worst) rep.field_check = r.field_check;
        if (r.worst >= rep.worst) {
            rep.worst = r.worst;
            rep.witness = r.witness;
        }
    }
    rep.finalize(tol);
    return rep;
}

// ---------------------------------------------------------------------------
// Poisson distributions (pointwise surrogate of Definition-style checks)

DistributionReport check_poisson_distribution(const PoissonStructure& P,
                                              const std::vector<VectorFieldExpr>& spanning_fields,
                                              const std::vector<Eigen::VectorXd>& samples, double tol,
                                              std::uint64_t seed) {
    DistributionReport rep;
    const int n = P.dimension();
    if (spanning_fields.empty() || samples.empty()) {
        rep.detail = "no fields or no samples";
        rep.finalize(tol);
        return rep;
    }
    for (const auto& V : spanning_fields)
        require_same_chart(V.chart, P.chart(), "spanning field over a different chart");

    // Span rank per sample; varying rank is reported, not fatal.
    int rank0 = -1;
    for (const auto& z : samples) {
        Eigen::MatrixXd D(n, static_cast<Eigen::Index>(spanning_fields.size()));
        for (std::size_t c = 0; c < spanning_fields.size(); ++c) D.col(static_cast<Eigen::Index>(c)) = spanning_fields[c].evaluate(z);
        int r = numerical_rank(D);
        if (rank0 < 0) rank0 = r;
        if (r != rank0) rep.rank_constant = false;
    }
    if (!rep.rank_constant) rep.note = "span rank varies across samples; degenerate span, evidence only";

    // Solve the linear annihilation conditions on the degree-<=2
    // coefficient space: rows are <grad(monomial)(z), V(z)>.
    auto monos = monomials_up_to_degree(n, 2);
    const auto m = static_cast<Eigen::Index>(monos.size());
    std::vector<std::vector<Expression>> mono_grads;
    mono_grads.reserve(monos.size());
    for (const auto& mono : monos) mono_grads.push_back(gradient(monomial_expression(P.chart(), mono), P.chart()));

    Eigen::MatrixXd A(static_cast<Eigen::Index>(samples.size() * spanning_fields.size()), m);
    Eigen::Index row = 0;
    for (const auto& z : samples) {
        for (const auto& V : spanning_fields) {
            Eigen::VectorXd v = V.evaluate(z);
            for (Eigen::Index c = 0; c < m; ++c) {
                double dot = 0.0;
                for (int i = 0; i < n; ++i)
                    dot += evaluate(mono_grads[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)], z) * v[i];
                A(row, c) = dot;
            }
            ++row;
        }
    }

    Eigen::MatrixXd N = null_space_basis(A, 1e-9);
    // Constants always annihilate; the interesting family is what remains.
    rep.annihilating_family_size = static_cast<int>(N.cols()) - 1;
    if (rep.annihilating_family_size <= 0) {
        rep.detail = "only constants annihilate the span at the samples; condition holds vacuously";
        rep.finalize(tol);
        return rep;
    }

    Rng rng(seed);
    auto build = [&](const Eigen::VectorXd& coef) {
        Polynomial p(n);
        for (Eigen::Index c = 0; c < m; ++c) p.add_term(monos[static_cast<std::size_t>(c)], coef[c]);
        return p.to_expression(P.chart());
    };

    const int trials = 8;
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd a(N.cols()), b(N.cols());
        for (Eigen::Index i = 0; i < N.cols(); ++i) {
            a[i] = rng.uniform(-1.0, 1.0);
            b[i] = rng.uniform(-1.0, 1.0);
        }
        Expression f = build(N * a);
        Expression g = build(N * b);
        Expression fg = bracket(P, f, g);
        auto dfg = gradient(fg, P.chart());
        for (const auto& z : samples) {
            for (const auto& V : spanning_fields) {
                Eigen::VectorXd v = V.evaluate(z);
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += evaluate(dfg[static_cast<std::size_t>(i)], z) * v[i];
                rep.absorb(std::abs(dot), z);
            }
        }
    }
    rep.detail = "d{f,g} annihilates the span at the samples for " + std::to_string(trials) +
                 " random pairs from a family of dimension " + std::to_string(rep.annihilating_family_size);
    rep.finalize(tol);
    return rep;
}

// ---------------------------------------------------------------------------
// Built-in structures

PoissonStructure canonical_structure(int pairs, int extra_trivial, PoissonOptions options) {
    std::vector<std::string> names;
    for (int i = 1; i <= pairs; ++i) names.push_back("q" + std::to_string(i));
    for (int i = 1; i <= pairs; ++i) names.push_back("p" + std::to_string(i));
    for (int i = 1; i <= extra_trivial; ++i) names.push_back("c" + std::to_string(i));
    ChartPtr chart = make_chart(names);
    std::vector<std::tuple<int, int, Expression>> upper;
    for (int i = 0; i < pairs; ++i) upper.emplace_back(i, pairs + i, Expression(1.0));
    return PoissonStructure::from_upper_triangle(chart, upper, options);
}

PoissonStructure so3_structure(PoissonOptions options) {
    ChartPtr chart = make_chart({"x1", "x2", "x3"});
    auto x = coordinates(chart);
    std::vector<std::tuple<int, int, Expression>> upper = {
        {0, 1, simplify(-x[2])}, // {x1,x2} = -x3
        {0, 2, x[1]},            // {x1,x3} =  x2
        {1, 2, simplify(-x[0])}, // {x2,x3} = -x1
    };
    return PoissonStructure::from_upper_triangle(chart, upper, options);
}

PoissonStructure direct_sum(const PoissonStructure& a, const PoissonStructure& b, PoissonOptions options) {
    std::vector<std::string> names = a.chart()->names();
    names.insert(names.end(), b.chart()->names().begin(), b.chart()->names().end());
    ChartPtr chart = make_chart(std::move(names));
    const int na = a.dimension(), nb = b.dimension();
    std::vector<std::vector<Expression>> entries(
        static_cast<std::size_t>(na + nb),
        std::vector<Expression>(static_cast<std::size_t>(na + nb), Expression(0.0)));
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j)
            entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = reindex(a.entry(i, j), 0, chart);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
            entries[static_cast<std::size_t>(na + i)][static_cast<std::size_t>(na + j)] =
                reindex(b.entry(i, j), na, chart);
    return PoissonStructure(chart, std::move(entries), options);
}

} // namespace preduce
