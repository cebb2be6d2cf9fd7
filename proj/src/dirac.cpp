#include "preduce/dirac.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "preduce/linalg.hpp"

namespace preduce {

namespace {

std::string point_string(const Eigen::VectorXd& z) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (i) s += ", ";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", z[i]);
        s += buf;
    }
    return s + ")";
}

// Cofactor-expansion determinant of a small expression matrix.
Expression symbolic_determinant(const std::vector<std::vector<Expression>>& m, std::vector<int> cols,
                                int row) {
    const int k = static_cast<int>(cols.size());
    if (k == 1) return m[static_cast<std::size_t>(row)][static_cast<std::size_t>(cols[0])];
    Expression det(0.0);
    bool any = false;
    for (int c = 0; c < k; ++c) {
        const Expression& pivot = m[static_cast<std::size_t>(row)][static_cast<std::size_t>(cols[c])];
        if (pivot.is_constant(0.0)) continue;
        std::vector<int> rest;
        for (int cc = 0; cc < k; ++cc)
            if (cc != c) rest.push_back(cols[cc]);
        Expression minor = symbolic_determinant(m, rest, row + 1);
        Expression term = pivot * minor;
        if (c % 2 == 1) term = -term;
        det = any ? det + term : term;
        any = true;
    }
    return any ? simplify(det) : Expression(0.0);
}

Expression symbolic_determinant(const std::vector<std::vector<Expression>>& m) {
    std::vector<int> cols(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) cols[i] = static_cast<int>(i);
    return symbolic_determinant(m, cols, 0);
}

} // namespace

// ---------------------------------------------------------------------------
// DiracContext

DiracContext::DiracContext(std::shared_ptr<const ConstraintSet> constraints,
                           const std::vector<SurfaceSample>& validation_samples, DiracOptions options)
    : constraints_(std::move(constraints)), options_(options) {
    if (!constraints_) throw StructureError("Dirac context requires a constraint set");
    const int k = constraints_->size();

    if (validation_samples.empty())
        throw StructureError("Dirac context requires on-surface validation samples");
    ClassificationReport cls = classify(*constraints_, validation_samples, options_.classify);
    if (cls.label != SubmanifoldClass::Cosymplectic)
        throw StructureError(std::string("Dirac reduction requires a cosymplectic constraint set; ") +
                             "classification returned '" + to_string(cls.label) + "'" +
                             (cls.note.empty() ? "" : " (" + cls.note + ")"));
    if (k % 2 != 0)
        throw StructureError("second-class constraint count must be even (invertible antisymmetric C)");

    for (int j = 0; j < k; ++j)
        psi_fields_.push_back(hamiltonian_vector_field(ambient(), constraints_->constraint(j)));

    for (const auto& s : validation_samples) {
        double d = scaled_abs_det(s.z);
        if (d <= options_.det_floor)
            throw StructureError("constraint matrix is numerically singular at sample " + point_string(s.z) +
                                 " (scaled |det| = " + std::to_string(d) + ")");
    }

    if (k <= options_.symbolic_max_k) {
        symbolic_inverse_ = true;
        std::vector<std::vector<Expression>> C(static_cast<std::size_t>(k),
                                               std::vector<Expression>(static_cast<std::size_t>(k)));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) C[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                constraints_->constraint_bracket(i, j);
        det_ = symbolic_determinant(C);
        // adj(C)_{ij} = (-1)^{i+j} * minor_{ji}
        adjugate_.assign(static_cast<std::size_t>(k), std::vector<Expression>(static_cast<std::size_t>(k)));
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                if (k == 1) {
                    adjugate_[0][0] = Expression(1.0);
                    continue;
                }
                std::vector<std::vector<Expression>> minor;
                for (int r = 0; r < k; ++r) {
                    if (r == j) continue;
                    std::vector<Expression> row;
                    for (int c = 0; c < k; ++c) {
                        if (c == i) continue;
                        row.push_back(C[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
                    }
                    minor.push_back(std::move(row));
                }
                Expression cof = symbolic_determinant(minor);
                adjugate_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    ((i + j) % 2 == 0) ? cof : simplify(-cof);
            }
        }
    }
}

const VectorFieldExpr& DiracContext::constraint_field(int j) const {
    return psi_fields_[static_cast<std::size_t>(j)];
}

Eigen::MatrixXd DiracContext::c_matrix_at(const Eigen::VectorXd& z) const {
    const int k = constraint_count();
    Eigen::MatrixXd C(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) C(i, j) = evaluate(constraints_->constraint_bracket(i, j), z);
    return C;
}

double DiracContext::scaled_abs_det(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd C = c_matrix_at(z);
    for (Eigen::Index r = 0; r < C.rows(); ++r) {
        double norm = C.row(r).norm();
        if (norm == 0.0) return 0.0;
        C.row(r) /= norm;
    }
    return std::abs(C.determinant());
}

Eigen::MatrixXd DiracContext::c_inverse_at(const Eigen::VectorXd& z) const {
    if (scaled_abs_det(z) <= options_.det_floor)
        throw NumericalError("constraint matrix C is numerically singular at " + point_string(z) +
                             "; the point is outside the second-class region");
    Eigen::MatrixXd C = c_matrix_at(z);
    return C.partialPivLu().inverse();
}

const Expression& DiracContext::adjugate_entry(int i, int j) const {
    if (!symbolic_inverse_) throw StructureError("no symbolic C-inverse for this constraint count");
    return adjugate_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
}

const Expression& DiracContext::determinant() const {
    if (!symbolic_inverse_) throw StructureError("no symbolic C-inverse for this constraint count");
    return det_;
}

// ---------------------------------------------------------------------------
// Bracket values

namespace {

// Per-pair symbolic data for the correction sum.
struct CompiledPair {
    Expression fg;
    std::vector<Expression> f_psi; // {F, psi^i}
    std::vector<Expression> psi_g; // {psi^j, G}
};

CompiledPair compile_pair(const DiracContext& D, const Expression& F, const Expression& G) {
    CompiledPair cp;
    const auto& P = D.ambient();
    cp.fg = bracket(P, F, G);
    for (int i = 0; i < D.constraint_count(); ++i) {
        cp.f_psi.push_back(bracket(P, F, D.constraints().constraint(i)));
        cp.psi_g.push_back(bracket(P, D.constraints().constraint(i), G));
    }
    return cp;
}

double pair_value(const DiracContext& D, const CompiledPair& cp, const Eigen::VectorXd& z) {
    const int k = D.constraint_count();
    Eigen::MatrixXd Cinv = D.c_inverse_at(z);
    Eigen::VectorXd a(k), b(k);
    for (int i = 0; i < k; ++i) {
        a[i] = evaluate(cp.f_psi[static_cast<std::size_t>(i)], z);
        b[i] = evaluate(cp.psi_g[static_cast<std::size_t>(i)], z);
    }
    return evaluate(cp.fg, z) - a.dot(Cinv * b);
}

} // namespace

double dirac_bracket_value(const DiracContext& D, const Expression& F, const Expression& G,
                           const SurfaceSample& s) {
    return pair_value(D, compile_pair(D, F, G), s.z);
}

Eigen::VectorXd dirac_bracket_values(const DiracContext& D, const Expression& F, const Expression& G,
                                     const std::vector<SurfaceSample>& samples) {
    CompiledPair cp = compile_pair(D, F, G);
    Eigen::VectorXd out(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = pair_value(D, cp, samples[i].z);
    return out;
}

Expression dirac_bracket_expr(const DiracContext& D, const Expression& F, const Expression& G) {
    if (!D.symbolic_inverse())
        throw StructureError("symbolic Dirac brackets need k <= " +
                             std::to_string(D.options().symbolic_max_k) +
                             "; use pointwise evaluation (dirac_bracket_value) instead");
    const int k = D.constraint_count();
    CompiledPair cp = compile_pair(D, F, G);
    Expression corr(0.0);
    bool any = false;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const Expression& adj = D.adjugate_entry(i, j);
            if (adj.is_constant(0.0)) continue;
            Expression term = cp.f_psi[static_cast<std::size_t>(i)] * adj * cp.psi_g[static_cast<std::size_t>(j)];
            corr = any ? corr + term : term;
            any = true;
        }
    }
    if (!any) return simplify(cp.fg);
    return simplify(cp.fg - corr / D.determinant());
}

// ---------------------------------------------------------------------------
// Dirac vector fields

Eigen::VectorXd dirac_vector_field(const DiracContext& D, const Expression& F, const SurfaceSample& s) {
    DiracFieldExpr field(std::make_shared<DiracContext>(D), F);
    return field.evaluate(s.z);
}

DiracFieldExpr::DiracFieldExpr(DiracPtr context, const Expression& F)
    : context_(std::move(context)), ambient_field_(hamiltonian_vector_field(context_->ambient(), F)) {
    for (int i = 0; i < context_->constraint_count(); ++i)
        f_psi_.push_back(bracket(context_->ambient(), F, context_->constraints().constraint(i)));
}

Eigen::VectorXd DiracFieldExpr::evaluate(const Eigen::VectorXd& z) const {
    const int k = context_->constraint_count();
    Eigen::VectorXd v = ambient_field_.evaluate(z);
    Eigen::MatrixXd Cinv = context_->c_inverse_at(z);
    Eigen::VectorXd a(k);
    for (int i = 0; i < k; ++i) a[i] = preduce::evaluate(f_psi_[static_cast<std::size_t>(i)], z);
    Eigen::VectorXd coeff = Cinv.transpose() * a; // coeff_j = sum_i a_i Cinv_ij
    for (int j = 0; j < k; ++j) v -= coeff[j] * context_->constraint_field(j).evaluate(z);
    return v;
}

// ---------------------------------------------------------------------------
// Projection and reduced tensor

Eigen::MatrixXd projection_pi_S(const DiracContext& D, const SurfaceSample& s) {
    const int n = D.dimension();
    const int k = D.constraint_count();
    Eigen::MatrixXd B = D.ambient().tensor_at(s.z);
    Eigen::MatrixXd U = B * s.conormal; // kernel directions
    Eigen::MatrixXd M(n, n);
    M << s.tangent, U;
    if (condition_number(M) > 1e12)
        throw NumericalError("Whitney decomposition is numerically rank deficient at " + point_string(s.z));
    Eigen::MatrixXd T0(n, n);
    T0 << s.tangent, Eigen::MatrixXd::Zero(n, k);
    return T0 * M.partialPivLu().inverse();
}

ProjectedTensor reduced_tensor(const DiracContext& D, const SurfaceSample& s) {
    ProjectedTensor out;
    Eigen::MatrixXd pi = projection_pi_S(D, s);
    Eigen::MatrixXd B = D.ambient().tensor_at(s.z);
    out.ambient = pi * B * pi.transpose();
    out.tangential = s.tangent.transpose() * out.ambient * s.tangent;
    return out;
}

int reduced_leaf_dimension(const DiracContext& D, const SurfaceSample& s) {
    return numerical_rank(reduced_tensor(D, s).tangential, D.ambient().options().rank_rel_tol);
}

// ---------------------------------------------------------------------------
// Leaf orthogonality (the omega-complement statement)

LeafOrthogonalityReport leaf_orthogonality_check(const DiracContext& D, const SurfaceSample& s, double tol) {
    LeafOrthogonalityReport rep;
    const double rel = D.ambient().options().rank_rel_tol;
    Eigen::MatrixXd B = D.ambient().tensor_at(s.z);

    Eigen::MatrixXd U = B * s.conormal;                    // B#((T_sS)°)
    Eigen::MatrixXd im = column_space_basis(B, rel);       // T_s L_s
    Eigen::MatrixXd W = intersection_basis(s.tangent, im, rel); // T_sS ∩ T_sL_s

    rep.dim_u = numerical_rank(U, rel);
    rep.dim_w = static_cast<int>(W.cols());
    rep.rank_b = numerical_rank(B, rel);
    rep.dimension_split_ok = rep.dim_u + rep.dim_w == rep.rank_b;

    // omega(B# alpha, w) = <alpha, w>: pair the conormal covectors
    // against the W basis directly.
    if (W.cols() > 0) rep.pairing_worst = (s.conormal.transpose() * W).cwiseAbs().maxCoeff();

    // omega restricted to U in the basis X_{psi^a} is exactly C(s).
    Eigen::MatrixXd C = D.c_matrix_at(s.z);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
    const auto& sv = svd.singularValues();
    rep.nondegeneracy_margin = sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;

    rep.passed = rep.pairing_worst <= tol && rep.nondegeneracy_margin > 1e-10 && rep.dimension_split_ok;
    rep.detail = rep.passed ? "U is the omega-orthogonal complement of the reduced leaf direction"
                            : "orthogonality or nondegeneracy failed";
    return rep;
}

} // namespace preduce
