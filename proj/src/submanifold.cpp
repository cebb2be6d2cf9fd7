#include "preduce/submanifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "preduce/linalg.hpp"

namespace preduce {

// ---------------------------------------------------------------------------
// ConstraintSet

ConstraintSet::ConstraintSet(PoissonPtr ambient, std::vector<Expression> constraints,
                             std::vector<Eigen::VectorXd> seeds)
    : ambient_(std::move(ambient)), constraints_(std::move(constraints)), seeds_(std::move(seeds)) {
    if (!ambient_) throw StructureError("constraint set requires an ambient Poisson structure");
    const int n = ambient_->dimension();
    const int k = size();
    if (k == 0) throw StructureError("constraint set must contain at least one constraint");
    if (k > n) throw StructureError("more constraints than ambient dimensions");
    for (auto& e : constraints_) {
        if (e.chart() && !(e.chart() == ambient_->chart() || *e.chart() == *ambient_->chart()))
            throw ChartMismatchError("constraint over a different chart");
        e = simplify(e);
    }
    for (const auto& s : seeds_)
        if (s.size() != n) throw StructureError("seed dimension differs from the ambient chart");

    grads_.reserve(constraints_.size());
    for (const auto& e : constraints_) grads_.push_back(gradient(e, ambient_->chart()));

    brackets_.resize(static_cast<std::size_t>(k), std::vector<Expression>(static_cast<std::size_t>(k)));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            brackets_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                bracket(*ambient_, constraint(i), constraint(j));
            if (!brackets_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].is_constant(0.0))
                brackets_symbolically_zero_ = false;
        }
}

const Expression& ConstraintSet::constraint_bracket(int i, int j) const {
    return brackets_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
}

const std::vector<Expression>& ConstraintSet::constraint_gradient(int a) const {
    return grads_[static_cast<std::size_t>(a)];
}

Eigen::VectorXd ConstraintSet::residual(const Eigen::VectorXd& z) const {
    Eigen::VectorXd r(size());
    for (int a = 0; a < size(); ++a) r[a] = evaluate(constraint(a), z);
    return r;
}

Eigen::MatrixXd ConstraintSet::jacobian(const Eigen::VectorXd& z) const {
    const int n = ambient_->dimension();
    Eigen::MatrixXd J(size(), n);
    for (int a = 0; a < size(); ++a)
        for (int i = 0; i < n; ++i)
            J(a, i) = evaluate(grads_[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)], z);
    return J;
}

// ---------------------------------------------------------------------------
// Newton sampling

namespace {

struct NewtonOutcome {
    bool converged = false;
    bool rank_ok = false;
    double best_residual = std::numeric_limits<double>::infinity();
    Eigen::VectorXd z;
};

NewtonOutcome newton_solve(const ConstraintSet& C, Eigen::VectorXd z, const NewtonOptions& opt) {
    NewtonOutcome out;
    for (int it = 0; it <= opt.max_iterations; ++it) {
        Eigen::VectorXd F;
        try {
            F = C.residual(z);
        } catch (const EvalError&) {
            return out;
        }
        double r = F.cwiseAbs().maxCoeff();
        out.best_residual = std::min(out.best_residual, r);
        if (r <= opt.tolerance) {
            out.converged = true;
            out.z = z;
            Eigen::MatrixXd J = C.jacobian(z);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
            double smin = svd.singularValues()(svd.singularValues().size() - 1);
            out.rank_ok = numerical_rank(J, opt.rank_rel_tol) == C.size() && smin > opt.rank_abs_floor;
            return out;
        }
        if (it == opt.max_iterations) break;
        Eigen::MatrixXd J;
        try {
            J = C.jacobian(z);
        } catch (const EvalError&) {
            return out;
        }
        // minimum-norm least-squares step (pseudo-inverse)
        Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(F);
        z -= step;
        if (!z.allFinite() || z.norm() > 1e8) return out;
    }
    return out;
}

} // namespace

Eigen::VectorXd project_to_surface(const ConstraintSet& C, const Eigen::VectorXd& z0, NewtonOptions options) {
    NewtonOutcome out = newton_solve(C, z0, options);
    if (!out.converged)
        throw NumericalError("projection to the constraint surface did not converge (best residual " +
                             std::to_string(out.best_residual) + ")");
    return out.z;
}

SurfaceSample make_surface_sample(const ConstraintSet& C, const Eigen::VectorXd& z, double rank_rel_tol) {
    SurfaceSample s;
    s.z = z;
    Eigen::MatrixXd J = C.jacobian(z);
    if (numerical_rank(J, rank_rel_tol) != C.size())
        throw NumericalError("constraint Jacobian is rank deficient at the sample point");
    s.tangent = null_space_basis(J, rank_rel_tol);
    s.conormal = J.transpose();
    return s;
}

std::vector<SurfaceSample> sample_surface(const ConstraintSet& C, int count, NewtonOptions options) {
    if (C.seeds().empty()) throw StructureError("constraint set has no seed points");
    const int n = C.ambient().dimension();
    Rng rng(options.seed), rng_backup(options.seed + 1);

    std::vector<SurfaceSample> out;
    double best_residual = std::numeric_limits<double>::infinity();
    int rank_deficient = 0;
    int attempts_total = 0;
    const int max_attempts = options.max_attempts_per_sample * count;

    std::size_t seed_idx = 0;
    while (static_cast<int>(out.size()) < count && attempts_total < max_attempts) {
        ++attempts_total;
        Eigen::VectorXd z0 = C.seeds()[seed_idx % C.seeds().size()];
        seed_idx++;
        for (int i = 0; i < n; ++i) z0[i] += rng.uniform(-options.perturbation, options.perturbation);
        NewtonOutcome o = newton_solve(C, z0, options);
        best_residual = std::min(best_residual, o.best_residual);
        if (!o.converged) continue;
        if (!o.rank_ok) {
            ++rank_deficient;
            continue;
        }
        if (C.residual(o.z).cwiseAbs().maxCoeff() > options.residual_bound) continue;
        out.push_back(make_surface_sample(C, o.z, options.rank_rel_tol));
    }
    if (static_cast<int>(out.size()) < count) {
        if (rank_deficient > 0 && out.empty())
            throw NumericalError("constraint Jacobian is rank deficient at every converged point (" +
                                 std::to_string(rank_deficient) + " attempts); the level set is not regular there");
        throw NumericalError("surface sampling failed: " + std::to_string(out.size()) + "/" +
                             std::to_string(count) + " samples after " + std::to_string(attempts_total) +
                             " attempts (best residual " + std::to_string(best_residual) + ")");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classification

Eigen::MatrixXd constraint_matrix(const ConstraintSet& C, const SurfaceSample& s) {
    const int k = C.size();
    Eigen::MatrixXd M(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) M(i, j) = evaluate(C.constraint_bracket(i, j), s.z);
    return M;
}

const char* to_string(SubmanifoldClass c) {
    switch (c) {
        case SubmanifoldClass::Coisotropic: return "coisotropic";
        case SubmanifoldClass::Cosymplectic: return "cosymplectic";
        case SubmanifoldClass::PoissonSubmanifold: return "poisson-submanifold";
        case SubmanifoldClass::Mixed: return "mixed";
    }
    return "?";
}

ClassificationReport classify(const ConstraintSet& C, const std::vector<SurfaceSample>& samples,
                              ClassifyOptions options) {
    if (samples.empty()) throw StructureError("classification requires at least one on-surface sample");
    const int n = C.ambient().dimension();
    const int k = C.size();

    ClassificationReport rep;
    bool all_zero = true, all_invertible = true, all_image_tangent = true, all_transversal = true;
    bool all_ham_tangent = true;
    bool condition_warning = false;

    Rng rng(options.seed);
    std::vector<Expression> probes;
    for (int t = 0; t < 4; ++t) probes.push_back(random_polynomial(C.ambient().chart(), 2, rng));

    for (const auto& s : samples) {
        SampleEvidence ev;
        Eigen::MatrixXd Cm = constraint_matrix(C, s);
        Eigen::MatrixXd B = C.ambient().tensor_at(s.z);

        ev.c_norm = Cm.cwiseAbs().maxCoeff();
        ev.c_rank = numerical_rank(Cm, options.rank_rel_tol);
        ev.c_condition = condition_number(Cm);

        // image B^sharp(s) inside the tangent space?
        ev.image_tangent = subspace_membership_residual(s.tangent, B) <= options.membership_tol;

        // transversality: T_s S + im B^sharp = T_s M (Def. of cosymplectic, (ii))
        Eigen::MatrixXd TB(n, s.tangent.cols() + n);
        TB << s.tangent, B;
        ev.transversal = numerical_rank(TB, options.rank_rel_tol) == n;

        // sampled quasi-Poisson surrogate: Hamiltonian fields of random
        // functions stay tangent at s
        ev.hamiltonian_tangent = true;
        for (const auto& f : probes) {
            Eigen::VectorXd grad_f(n);
            auto df = gradient(f, C.ambient().chart());
            for (int i = 0; i < n; ++i) grad_f[i] = evaluate(df[static_cast<std::size_t>(i)], s.z);
            Eigen::VectorXd Xf = B * grad_f;
            if (subspace_membership_residual(s.tangent, Xf) > options.membership_tol) {
                ev.hamiltonian_tangent = false;
                break;
            }
        }

        all_zero = all_zero && ev.c_norm <= options.coisotropic_tol;
        bool invertible = ev.c_rank == k && std::isfinite(ev.c_condition);
        if (invertible && ev.c_condition > options.condition_limit) {
            invertible = false;
            condition_warning = true;
        }
        all_invertible = all_invertible && invertible;
        all_image_tangent = all_image_tangent && ev.image_tangent;
        all_transversal = all_transversal && ev.transversal;
        all_ham_tangent = all_ham_tangent && ev.hamiltonian_tangent;

        rep.worst_c_norm = std::max(rep.worst_c_norm, ev.c_norm);
        if (std::isfinite(ev.c_condition)) rep.worst_condition = std::max(rep.worst_condition, ev.c_condition);
        rep.evidence.push_back(ev);
    }

    if (all_image_tangent) {
        rep.label = SubmanifoldClass::PoissonSubmanifold;
    } else if (all_zero) {
        rep.label = SubmanifoldClass::Coisotropic;
        rep.symbolically_proven = C.brackets_symbolically_zero();
        if (rep.symbolically_proven)
            rep.note = "involution proven: every constraint bracket simplifies to 0";
    } else if (all_invertible && all_transversal) {
        rep.label = SubmanifoldClass::Cosymplectic;
    } else {
        rep.label = SubmanifoldClass::Mixed;
        if (condition_warning)
            rep.note = "constraint matrix condition number exceeds " +
                       std::to_string(options.condition_limit) + "; refusing the cosymplectic label";
        rep.quasi_poisson_hint = all_ham_tangent;
        if (rep.quasi_poisson_hint)
            rep.note += std::string(rep.note.empty() ? "" : "; ") +
                        "sampled Hamiltonian fields stay tangent (quasi-Poisson evidence only; the "
                        "definition quantifies over all local functions)";
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Coisotropic equivalences

EquivalenceReport coisotropic_equivalences_test(const ConstraintSet& C,
                                                const std::vector<SurfaceSample>& samples, double tol,
                                                std::uint64_t seed) {
    EquivalenceReport rep;
    ClassificationReport cls = classify(C, samples);
    if (cls.label != SubmanifoldClass::Coisotropic) {
        rep.refused = true;
        rep.detail = std::string("classification is ") + to_string(cls.label) +
                     ", not coisotropic; equivalence test refused";
        return rep;
    }

    const int k = C.size();
    Rng rng(seed);
    const auto& chart = C.ambient().chart();

    // random functions vanishing on S: f = sum_a a_a(x) F^a
    const int trials = 6;
    std::vector<Expression> vanishing;
    for (int t = 0; t < trials; ++t) {
        Expression f(0.0);
        for (int a = 0; a < k; ++a) {
            Expression coeff = random_polynomial(chart, 2, rng);
            f = a == 0 ? coeff * C.constraint(a) : f + coeff * C.constraint(a);
        }
        vanishing.push_back(simplify(f));
    }

    for (const auto& f : vanishing) {
        VectorFieldExpr Xf = hamiltonian_vector_field(C.ambient(), f);
        for (const auto& s : samples) {
            Eigen::VectorXd v = Xf.evaluate(s.z);
            rep.tangency.absorb(subspace_membership_residual(s.tangent, v) * (1.0 + v.norm()), s.z);
        }
    }
    rep.tangency.finalize(tol);

    for (std::size_t a = 0; a < vanishing.size(); ++a)
        for (std::size_t b = a + 1; b < vanishing.size(); ++b) {
            Expression fg = bracket(C.ambient(), vanishing[a], vanishing[b]);
            for (const auto& s : samples) rep.involution.absorb(std::abs(evaluate(fg, s.z)), s.z);
        }
    rep.involution.finalize(tol);

    rep.worst = std::max(rep.tangency.worst, rep.involution.worst);
    rep.witness = rep.tangency.worst >= rep.involution.worst ? rep.tangency.witness : rep.involution.witness;
    rep.detail = "equivalences (ii) and (iv) agree with the classification";
    rep.finalize(tol);
    return rep;
}

// ---------------------------------------------------------------------------
// Cosymplectic decomposition properties

DecompositionReport cosymplectic_decomposition_checks(const ConstraintSet& C,
                                                      const std::vector<SurfaceSample>& samples,
                                                      double rank_rel_tol) {
    DecompositionReport rep;
    const int n = C.ambient().dimension();
    const int k = C.size();
    rep.kernel_margin = std::numeric_limits<double>::infinity();

    for (const auto& s : samples) {
        Eigen::MatrixXd B = C.ambient().tensor_at(s.z);
        Eigen::MatrixXd U = B * s.conormal; // B#((T_s S)°), n x k

        // (ii): no nonzero conormal combination in ker B^sharp
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(U);
        double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        double smin = svd.singularValues().size() ? svd.singularValues()(svd.singularValues().size() - 1) : 0.0;
        rep.kernel_margin = std::min(rep.kernel_margin, smin / std::max(1.0, smax));

        // (iii)/(iv): T_s M = B#((T_sS)°) ⊕ T_s S
        Eigen::MatrixXd UT(n, U.cols() + s.tangent.cols());
        UT << U, s.tangent;
        if (numerical_rank(UT, rank_rel_tol) != n) rep.whitney_rank_ok = false;

        // (v): leaves intersect S transversely
        Eigen::MatrixXd TB(n, s.tangent.cols() + n);
        TB << s.tangent, B;
        if (numerical_rank(TB, rank_rel_tol) != n) rep.transversality_ok = false;

        // (i): T_s L = (T_s S ∩ T_s L) ⊕ B#((T_sS)°)
        Eigen::MatrixXd im = column_space_basis(B, rank_rel_tol);
        Eigen::MatrixXd W = intersection_basis(s.tangent, im, rank_rel_tol);
        Eigen::MatrixXd WU(n, W.cols() + U.cols());
        WU << W, U;
        bool split = numerical_rank(WU, rank_rel_tol) == static_cast<int>(W.cols()) + k &&
                     static_cast<int>(W.cols()) + k == numerical_rank(B, rank_rel_tol);
        if (!split) rep.leaf_split_ok = false;
    }
    rep.passed = rep.kernel_margin > 1e-10 && rep.whitney_rank_ok && rep.transversality_ok && rep.leaf_split_ok;
    rep.detail = rep.passed ? "kernel margin, Whitney sum, transversality, and leaf split verified"
                            : "a decomposition property failed";
    return rep;
}

// ---------------------------------------------------------------------------
// Regular reducibility (pointwise)

ReducibilityReport regular_reducibility_check(const PoissonStructure& P, const ConstraintSet& C,
                                              const std::vector<VectorFieldExpr>& d_basis,
                                              const std::vector<SurfaceSample>& samples,
                                              double rank_rel_tol) {
    ReducibilityReport rep;
    const int n = P.dimension();
    if (d_basis.empty()) throw StructureError("reducibility check requires a distribution basis");
    for (const auto& V : d_basis)
        if (!(V.chart == P.chart() || *V.chart == *P.chart()))
            throw ChartMismatchError("distribution field over a different chart");

    for (const auto& s : samples) {
        Eigen::MatrixXd D(n, static_cast<Eigen::Index>(d_basis.size()));
        for (std::size_t c = 0; c < d_basis.size(); ++c) D.col(static_cast<Eigen::Index>(c)) = d_basis[c].evaluate(s.z);
        int rank_d = numerical_rank(D, rank_rel_tol);
        if (rep.distribution_rank < 0) rep.distribution_rank = rank_d;
        if (rank_d != rep.distribution_rank) rep.rank_jumps = true;

        // D° = annihilator of the span; B^sharp(D°) columns
        Eigen::MatrixXd ann = null_space_basis(D.transpose(), rank_rel_tol);
        Eigen::MatrixXd B = P.tensor_at(s.z);
        Eigen::MatrixXd image = B * ann;

        // membership: rank([T D]) must not grow when the image columns join
        Eigen::MatrixXd TD(n, s.tangent.cols() + D.cols());
        TD << s.tangent, D;
        double resid = subspace_membership_residual(TD, image);
        rep.absorb(resid, s.z);
        if (resid > rank_rel_tol * 10) ++rep.failures;
    }
    rep.finalize(rank_rel_tol * 10);
    rep.detail = rep.passed ? "B#(D°) lies inside TS + D at every sample"
                            : "membership fails at " + std::to_string(rep.failures) + " samples";
    if (rep.rank_jumps) rep.detail += "; distribution rank varies across samples";
    return rep;
}

} // namespace preduce
