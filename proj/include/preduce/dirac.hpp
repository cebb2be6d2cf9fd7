#ifndef PREDUCE_DIRAC_HPP
#define PREDUCE_DIRAC_HPP

#include <memory>
#include <vector>

#include "preduce/submanifold.hpp"

namespace preduce {

struct DiracOptions {
    double det_floor = 1e-12;  // on |det C(s)| after row-norm scaling
    int symbolic_max_k = 4;    // adjugate/determinant expression cap
    ClassifyOptions classify;
};

/// Second-class reduction context: a cosymplectic constraint set with
/// the symbolic data needed for Dirac brackets cached eagerly
/// (constraint-pair brackets, constraint Hamiltonian fields, and for
/// k <= 4 the symbolic adjugate and determinant of the C-matrix).
/// Immutable after construction; evaluations are pure.
class DiracContext {
public:
    DiracContext(std::shared_ptr<const ConstraintSet> constraints,
                 const std::vector<SurfaceSample>& validation_samples, DiracOptions options = {});

    const ConstraintSet& constraints() const { return *constraints_; }
    const PoissonStructure& ambient() const { return constraints_->ambient(); }
    const ChartPtr& chart() const { return ambient().chart(); }
    int dimension() const { return ambient().dimension(); }
    int constraint_count() const { return constraints_->size(); } // k, even
    const DiracOptions& options() const { return options_; }
    bool symbolic_inverse() const { return symbolic_inverse_; }
    /// X_{psi^j}.
    const VectorFieldExpr& constraint_field(int j) const;

    /// C(z) with entries {psi^i, psi^j}(z).
    Eigen::MatrixXd c_matrix_at(const Eigen::VectorXd& z) const;
    /// |det C(z)| after scaling each row to unit norm.
    double scaled_abs_det(const Eigen::VectorXd& z) const;
    /// C(z)^{-1}; throws NumericalError with the witness point when the
    /// scaled determinant falls below the floor (a near-singular C
    /// violates the second-class premise; it is never regularized).
    Eigen::MatrixXd c_inverse_at(const Eigen::VectorXd& z) const;

    /// Symbolic adjugate entry adj(C)_{ij} and det C (k <= 4 only).
    const Expression& adjugate_entry(int i, int j) const;
    const Expression& determinant() const;

private:
    std::shared_ptr<const ConstraintSet> constraints_;
    DiracOptions options_;
    bool symbolic_inverse_ = false;
    std::vector<VectorFieldExpr> psi_fields_;
    std::vector<std::vector<Expression>> adjugate_;
    Expression det_;
};

using DiracPtr = std::shared_ptr<const DiracContext>;

/// {F,G}(s) - sum_ij {F,psi^i}(s) C_ij(s) {psi^j,G}(s), with C_ij the
/// entries of C(s)^{-1}. Extension independent on S.
double dirac_bracket_value(const DiracContext& D, const Expression& F, const Expression& G,
                           const SurfaceSample& s);

/// Batch form: the per-pair symbolic data is compiled once.
Eigen::VectorXd dirac_bracket_values(const DiracContext& D, const Expression& F, const Expression& G,
                                     const std::vector<SurfaceSample>& samples);

/// Ambient expression whose restriction to S is the reduced bracket,
/// via C^{-1} = adj(C)/det(C); enables nested brackets. Requires the
/// symbolic-inverse mode (k <= 4); otherwise throws StructureError
/// directing the caller to pointwise evaluation.
Expression dirac_bracket_expr(const DiracContext& D, const Expression& F, const Expression& G);

/// X_F(s) - sum_ij {F,psi^i}(s) C_ij(s) X_{psi^j}(s); tangent to S.
Eigen::VectorXd dirac_vector_field(const DiracContext& D, const Expression& F, const SurfaceSample& s);

/// Compiled Dirac field of a fixed Hamiltonian, evaluable along a
/// trajectory staying near S.
class DiracFieldExpr {
public:
    DiracFieldExpr(DiracPtr context, const Expression& F);
    Eigen::VectorXd evaluate(const Eigen::VectorXd& z) const;
    const DiracContext& context() const { return *context_; }

private:
    DiracPtr context_;
    VectorFieldExpr ambient_field_;
    std::vector<Expression> f_psi_;
};

/// Idempotent projector with image T_sS and kernel B#(s)((T_sS)°), from
/// the Whitney sum decomposition.
Eigen::MatrixXd projection_pi_S(const DiracContext& D, const SurfaceSample& s);

/// The projected tensor pi_S B(s) pi_S^T at a sample, in ambient
/// coordinates plus its representation in the tangent basis.
struct ProjectedTensor {
    Eigen::MatrixXd ambient;    // n x n, antisymmetric, conormal directions in the kernel
    Eigen::MatrixXd tangential; // (n-k) x (n-k) in the sample's tangent basis
};

ProjectedTensor reduced_tensor(const DiracContext& D, const SurfaceSample& s);

struct LeafOrthogonalityReport {
    bool passed = false;
    double pairing_worst = 0.0;      // omega-pairing of U against W
    double nondegeneracy_margin = 0; // sigma_min/sigma_max of omega on U
    int dim_u = 0, dim_w = 0, rank_b = 0;
    bool dimension_split_ok = false; // dim U + dim W = rank B
    std::string detail;
};

/// Verifies that U = B#((T_sS)°) is omega-orthogonal to
/// W = T_sS ∩ im B#(s) inside the leaf and that omega restricted to U
/// is nondegenerate, using omega(B# a, B# b) = B(a,b).
LeafOrthogonalityReport leaf_orthogonality_check(const DiracContext& D, const SurfaceSample& s,
                                                 double tol = 1e-10);

/// Rank of the tangential reduced tensor = dim(T_sS ∩ im B#(s)); the
/// dimension of the reduced symplectic leaf direction at s.
int reduced_leaf_dimension(const DiracContext& D, const SurfaceSample& s);

} // namespace preduce

#endif
