#include "preduce/quotient.hpp"

#include <algorithm>
#include <cmath>

#include "preduce/linalg.hpp"
#include "preduce/polynomial.hpp"

namespace preduce {

QuotientSpec::QuotientSpec(PoissonPtr ambient, std::vector<SmoothMap> action_maps,
                           std::vector<Expression> generators, ChartPtr reduced_chart,
                           std::vector<std::vector<Expression>> closure, std::vector<Expression> relations)
    : ambient_(std::move(ambient)),
      action_(std::move(action_maps)),
      generators_(std::move(generators)),
      reduced_chart_(std::move(reduced_chart)),
      closure_(std::move(closure)),
      relations_(std::move(relations)) {
    if (!ambient_) throw StructureError("quotient requires an ambient Poisson structure");
    if (generators_.empty()) throw StructureError("quotient requires invariant generators");
    if (!reduced_chart_ || reduced_chart_->dimension() != generator_count())
        throw StructureError("reduced chart dimension must match the generator count");
    for (const auto& phi : action_) {
        if (!(phi.source() == ambient_->chart() || *phi.source() == *ambient_->chart()) ||
            !(phi.target() == ambient_->chart() || *phi.target() == *ambient_->chart()))
            throw StructureError("action maps must be endomorphisms of the ambient chart");
    }
    for (auto& g : generators_) {
        if (g.chart() && !(g.chart() == ambient_->chart() || *g.chart() == *ambient_->chart()))
            throw ChartMismatchError("generator over a different chart");
        g = simplify(g);
    }
    const auto m = static_cast<std::size_t>(generator_count());
    if (closure_.size() != m) throw StructureError("closure matrix must be m x m");
    for (auto& row : closure_) {
        if (row.size() != m) throw StructureError("closure matrix must be m x m");
        for (auto& e : row) {
            if (e.chart() && !(e.chart() == reduced_chart_ || *e.chart() == *reduced_chart_))
                throw ChartMismatchError("closure entry over a chart other than the reduced chart");
            e = simplify(e);
        }
    }
    for (auto& r : relations_) {
        if (r.chart() && !(r.chart() == reduced_chart_ || *r.chart() == *reduced_chart_))
            throw ChartMismatchError("relation over a chart other than the reduced chart");
        r = simplify(r);
    }

    generator_brackets_.resize(m, std::vector<Expression>(m));
    for (int a = 0; a < generator_count(); ++a)
        for (int b = 0; b < generator_count(); ++b)
            generator_brackets_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
                bracket(*ambient_, generators_[static_cast<std::size_t>(a)],
                        generators_[static_cast<std::size_t>(b)]);
}

const Expression& QuotientSpec::generator_bracket(int a, int b) const {
    return generator_brackets_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
}

Eigen::VectorXd QuotientSpec::image_point(const Eigen::VectorXd& z) const {
    Eigen::VectorXd y(generator_count());
    for (int a = 0; a < generator_count(); ++a) y[a] = evaluate(generators_[static_cast<std::size_t>(a)], z);
    return y;
}

Expression QuotientSpec::pull_back(const Expression& f) const {
    return simplify(compose(f, generators_, ambient_->chart()));
}

CheckReport verify_invariance(const QuotientSpec& Q, const std::vector<Eigen::VectorXd>& samples,
                              double tol) {
    CheckReport rep;
    for (const auto& phi : Q.action()) {
        std::vector<Expression> pulled;
        for (const auto& p : Q.generators()) pulled.push_back(simplify(phi.pullback(p) - p));
        for (const auto& z : samples)
            for (const auto& d : pulled) rep.absorb(std::abs(evaluate(d, z)), z);
    }
    rep.finalize(tol);
    rep.detail = rep.passed ? "all generators are action invariant at the samples"
                            : "a generator fails invariance";
    return rep;
}

ClosureReport verify_closure(const QuotientSpec& Q, const std::vector<Eigen::VectorXd>& samples,
                             double tol) {
    ClosureReport rep;
    const int m = Q.generator_count();
    for (int a = 0; a < m; ++a) {
        for (int b = a + 1; b < m; ++b) {
            const Expression& lhs = Q.generator_bracket(a, b);
            const Expression& lam = Q.closure()[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
            for (const auto& z : samples) {
                double r = std::abs(evaluate(lhs, z) - evaluate(lam, Q.image_point(z)));
                if (r >= rep.worst) {
                    rep.worst_a = a;
                    rep.worst_b = b;
                }
                rep.absorb(r, z);
            }
        }
    }
    for (const auto& z : samples) {
        double r = jacobi_residual_of_entries(Q.reduced_chart(), Q.closure(), Q.image_point(z));
        rep.reduced_jacobi_worst = std::max(rep.reduced_jacobi_worst, r);
    }
    rep.finalize(tol);
    if (rep.reduced_jacobi_worst > tol) rep.passed = false;
    rep.detail = rep.passed ? "brackets close onto Lambda(p(z)) and Lambda satisfies Jacobi on the image"
                            : "closure fails at generator pair (" + std::to_string(rep.worst_a) + "," +
                                  std::to_string(rep.worst_b) + ")";
    return rep;
}

PoissonStructure build_reduced(const QuotientSpec& Q, const std::vector<Eigen::VectorXd>& samples,
                               double tol) {
    CheckReport inv = verify_invariance(Q, samples, tol);
    if (!inv.passed)
        throw StructureError("cannot build the reduced structure: invariance fails (worst residual " +
                             std::to_string(inv.worst) + ")");
    ClosureReport clo = verify_closure(Q, samples, tol);
    if (!clo.passed)
        throw StructureError("cannot build the reduced structure: " + clo.detail);

    PoissonOptions opts = Q.ambient().options();
    std::vector<Eigen::VectorXd> image;
    image.reserve(samples.size());
    for (const auto& z : samples) image.push_back(Q.image_point(z));
    opts.validation_samples = std::move(image);
    return PoissonStructure(Q.reduced_chart(), Q.closure(), opts);
}

ReducedSystem reduce_hamiltonian(const QuotientSpec& Q, const Expression& h, const Expression& h_red,
                                 const std::vector<Eigen::VectorXd>& samples, double tol) {
    Expression diff = simplify(Q.pull_back(h_red) - h);
    for (const auto& z : samples) {
        double r = std::abs(evaluate(diff, z));
        if (r > tol)
            throw StructureError("reduced Hamiltonian does not descend: |h_red(p(z)) - h(z)| = " +
                                 std::to_string(r));
    }
    ReducedSystem R;
    R.reduced = std::make_shared<PoissonStructure>(build_reduced(Q, samples, tol));
    R.ambient_hamiltonian = h;
    R.reduced_hamiltonian = h_red;
    return R;
}

DynamicsReport compare_dynamics(const QuotientSpec& Q, const ReducedSystem& R, const Eigen::VectorXd& z0,
                                double T, double dt, double tol) {
    DynamicsReport rep;
    rep.tolerance = tol;
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.T = T;
    Trajectory ambient = integrate(Q.ambient(), R.ambient_hamiltonian, z0, cfg);
    Trajectory reduced = integrate(*R.reduced, R.reduced_hamiltonian, Q.image_point(z0), cfg);
    if (ambient.truncated || reduced.truncated) {
        rep.truncated = true;
        rep.detail = "integration truncated: " + (ambient.truncated ? ambient.error : reduced.error);
        return rep;
    }
    for (std::size_t i = 0; i < ambient.states.size(); ++i) {
        double d = (Q.image_point(ambient.states[i]) - reduced.states[i]).norm();
        rep.sup_deviation = std::max(rep.sup_deviation, d);
    }
    rep.passed = rep.sup_deviation <= tol;
    rep.detail = rep.passed ? "projected ambient flow matches the reduced flow"
                            : "flows deviate beyond tolerance";
    return rep;
}

CheckReport check_reduction_identity(const QuotientSpec& Q, const PoissonStructure& reduced,
                                     const std::vector<Eigen::VectorXd>& samples, int pairs, double tol,
                                     std::uint64_t seed) {
    CheckReport rep;
    Rng rng(seed);
    for (int t = 0; t < pairs; ++t) {
        Expression f = random_polynomial(Q.reduced_chart(), 2, rng);
        Expression g = random_polynomial(Q.reduced_chart(), 2, rng);
        Expression lhs = bracket(reduced, f, g);             // over y
        Expression rhs = bracket(Q.ambient(), Q.pull_back(f), Q.pull_back(g)); // over x
        for (const auto& z : samples) {
            double r = std::abs(evaluate(lhs, Q.image_point(z)) - evaluate(rhs, z));
            rep.absorb(r, z);
        }
    }
    rep.finalize(tol);
    rep.detail = rep.passed ? "the defining identity of the reduced bracket holds at the samples"
                            : "the reduced bracket mismatches the ambient bracket of pullbacks";
    return rep;
}

CheckReport check_casimir_descent(const QuotientSpec& Q, const Expression& casimir,
                                  const std::vector<Eigen::VectorXd>& samples, int funcs, double tol,
                                  std::uint64_t seed) {
    CheckReport rep;
    Rng rng(seed);
    Expression cp = Q.pull_back(casimir);
    for (int t = 0; t < funcs; ++t) {
        Expression g = random_polynomial(Q.reduced_chart(), 2, rng);
        Expression br = bracket(Q.ambient(), cp, Q.pull_back(g));
        for (const auto& z : samples) rep.absorb(std::abs(evaluate(br, z)), z);
    }
    rep.finalize(tol);
    rep.detail = rep.passed ? "the pulled-back Casimir commutes with every invariant at the samples"
                            : "Casimir descent fails";
    return rep;
}

std::optional<DiscoveredClosure> discover_closure(const PoissonStructure& ambient,
                                                  const std::vector<Expression>& generators,
                                                  const ChartPtr& reduced_chart,
                                                  const std::vector<Eigen::VectorXd>& samples,
                                                  int max_degree, double tol) {
    const int m = static_cast<int>(generators.size());
    auto monos = monomials_up_to_degree(m, max_degree);
    const auto basis = static_cast<Eigen::Index>(monos.size());
    if (static_cast<Eigen::Index>(samples.size()) < basis) return std::nullopt;

    // design matrix over image points
    Eigen::MatrixXd A(static_cast<Eigen::Index>(samples.size()), basis);
    std::vector<Eigen::VectorXd> images;
    images.reserve(samples.size());
    for (const auto& z : samples) {
        Eigen::VectorXd y(m);
        for (int a = 0; a < m; ++a) y[a] = evaluate(generators[static_cast<std::size_t>(a)], z);
        images.push_back(y);
    }
    for (std::size_t r = 0; r < samples.size(); ++r)
        for (Eigen::Index c = 0; c < basis; ++c) {
            double v = 1.0;
            for (int a = 0; a < m; ++a)
                for (unsigned e = 0; e < monos[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)]; ++e)
                    v *= images[r][a];
            A(static_cast<Eigen::Index>(r), c) = v;
        }
    auto solver = A.completeOrthogonalDecomposition();

    DiscoveredClosure out;
    out.closure.assign(static_cast<std::size_t>(m),
                       std::vector<Expression>(static_cast<std::size_t>(m), Expression(0.0)));
    for (int a = 0; a < m; ++a) {
        for (int b = a + 1; b < m; ++b) {
            Expression br = bracket(ambient, generators[static_cast<std::size_t>(a)],
                                    generators[static_cast<std::size_t>(b)]);
            Eigen::VectorXd rhs(static_cast<Eigen::Index>(samples.size()));
            for (std::size_t r = 0; r < samples.size(); ++r) rhs[static_cast<Eigen::Index>(r)] = evaluate(br, samples[r]);
            Eigen::VectorXd coef = solver.solve(rhs);
            // exactness post-check on the samples
            double resid = (A * coef - rhs).cwiseAbs().maxCoeff();
            out.fit_residual = std::max(out.fit_residual, resid);
            if (resid > tol) return std::nullopt;
            Polynomial p(m);
            for (Eigen::Index c = 0; c < basis; ++c)
                if (std::abs(coef[c]) > 1e-9) p.add_term(monos[static_cast<std::size_t>(c)], coef[c]);
            Expression lam = p.to_expression(reduced_chart);
            out.closure[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = lam;
            out.closure[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = simplify(-lam);
        }
    }
    return out;
}

} // namespace preduce
