#ifndef PREDUCE_SUBMANIFOLD_HPP
#define PREDUCE_SUBMANIFOLD_HPP

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "preduce/poisson.hpp"

namespace preduce {

/// Regular level-set submanifold S = F^{-1}(0) of the ambient chart,
/// with seed points for the on-surface Newton solver.
class ConstraintSet {
public:
    ConstraintSet(PoissonPtr ambient, std::vector<Expression> constraints,
                  std::vector<Eigen::VectorXd> seeds);

    const PoissonStructure& ambient() const { return *ambient_; }
    const PoissonPtr& ambient_ptr() const { return ambient_; }
    int size() const { return static_cast<int>(constraints_.size()); } // k
    const std::vector<Expression>& constraints() const { return constraints_; }
    const Expression& constraint(int a) const { return constraints_[static_cast<std::size_t>(a)]; }
    const std::vector<Eigen::VectorXd>& seeds() const { return seeds_; }
    /// Cached symbolic bracket {F^i, F^j}.
    const Expression& constraint_bracket(int i, int j) const;
    /// Cached gradient dF^a.
    const std::vector<Expression>& constraint_gradient(int a) const;
    /// Residual vector F(z).
    Eigen::VectorXd residual(const Eigen::VectorXd& z) const;
    /// k x n Jacobian of F at z.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const;
    /// True when every pairwise bracket simplifies to the zero
    /// expression (involution proven at the grammar level).
    bool brackets_symbolically_zero() const { return brackets_symbolically_zero_; }

private:
    PoissonPtr ambient_;
    std::vector<Expression> constraints_;
    std::vector<Eigen::VectorXd> seeds_;
    std::vector<std::vector<Expression>> grads_;
    std::vector<std::vector<Expression>> brackets_;
    bool brackets_symbolically_zero_ = true;
};

/// A point on S with its tangent and conormal data.
struct SurfaceSample {
    Eigen::VectorXd z;
    Eigen::MatrixXd tangent;  // n x (n-k), orthonormal, annihilated by every dF^a
    Eigen::MatrixXd conormal; // n x k, columns are the gradients dF^a(z)
};

struct NewtonOptions {
    int max_iterations = 50;
    double tolerance = 1e-13;       // Newton convergence on max |F^a|
    double residual_bound = 1e-12;  // accepted-sample guarantee
    double perturbation = 0.3;      // seed diversification scale
    double rank_rel_tol = 1e-10;
    /// A converged point only counts as regular when the smallest
    /// singular value of the constraint Jacobian clears this floor.
    /// Relative rank alone cannot flag a vanishing gradient, and a
    /// gradient that degenerates with the level set (like d(q^2) = 2q)
    /// is of order sqrt(tolerance) at the stopping point, far below
    /// this floor; honestly regular constraints sit far above it.
    double rank_abs_floor = 1e-4;
    int max_attempts_per_sample = 25;
    std::uint64_t seed = 42;
};

/// Newton iteration (minimum-norm steps) from perturbed seeds. Every
/// returned sample satisfies max |F^a| <= residual_bound and has a full
/// rank-k constraint Jacobian. Throws NumericalError when no sample can
/// be produced (reporting the best residual seen, or rank deficiency).
std::vector<SurfaceSample> sample_surface(const ConstraintSet& C, int count, NewtonOptions options = {});

/// Project a single point onto S by the same Newton iteration.
Eigen::VectorXd project_to_surface(const ConstraintSet& C, const Eigen::VectorXd& z0,
                                   NewtonOptions options = {});

/// Build the tangent/conormal bases of an on-surface point.
SurfaceSample make_surface_sample(const ConstraintSet& C, const Eigen::VectorXd& z,
                                  double rank_rel_tol = 1e-10);

/// C(s) with entries {F^i, F^j}(s).
Eigen::MatrixXd constraint_matrix(const ConstraintSet& C, const SurfaceSample& s);

enum class SubmanifoldClass { Coisotropic, Cosymplectic, PoissonSubmanifold, Mixed };

const char* to_string(SubmanifoldClass c);

struct SampleEvidence {
    double c_norm = 0.0;          // max |C entries|
    int c_rank = 0;
    double c_condition = 0.0;     // for invertible C
    bool image_tangent = false;   // image B^sharp(s) inside T_s S
    bool transversal = false;     // rank(T_s S + im B^sharp) = n
    bool hamiltonian_tangent = false; // sampled X_f(s) in T_s S (quasi-Poisson surrogate)
};

struct ClassificationReport {
    SubmanifoldClass label = SubmanifoldClass::Mixed;
    std::vector<SampleEvidence> evidence;
    /// Involution proven by simplification, not just sampled.
    bool symbolically_proven = false;
    /// Sampled Hamiltonian fields stay tangent although the
    /// Poisson-submanifold rank test fails; diagnostic only, and weaker
    /// than the definition (which quantifies over neighborhoods).
    bool quasi_poisson_hint = false;
    double worst_c_norm = 0.0;
    double worst_condition = 0.0;
    std::string note;
};

struct ClassifyOptions {
    double coisotropic_tol = 1e-10;   // C-matrix entries treated as zero
    double membership_tol = 1e-10;    // tangency of image columns
    double condition_limit = 1e8;     // beyond this C(s) counts as not invertible
    double rank_rel_tol = 1e-10;
    std::uint64_t seed = 42;
};

/// Classify S as poisson-submanifold / coisotropic / cosymplectic /
/// mixed from per-sample linear algebra. Throws on empty samples.
ClassificationReport classify(const ConstraintSet& C, const std::vector<SurfaceSample>& samples,
                              ClassifyOptions options = {});

struct EquivalenceReport : CheckReport {
    CheckReport tangency;    // (ii): X_f(s) in T_s S for f vanishing on S
    CheckReport involution;  // (iv): {f,g}(s) = 0 for f,g vanishing on S
    bool refused = false;    // precondition (classify != coisotropic) failed
};

/// Independent test of the coisotropic equivalences (ii) and (iv) on
/// random combinations sum_a a_a(x) F^a. Requires a coisotropic
/// classification; refuses otherwise.
EquivalenceReport coisotropic_equivalences_test(const ConstraintSet& C,
                                                const std::vector<SurfaceSample>& samples,
                                                double tol = 1e-9, std::uint64_t seed = 42);

struct DecompositionReport {
    bool passed = false;
    /// smallest sigma_min of B(s)·[dF] over samples, scaled; positive
    /// means no conormal combination sits in ker B^sharp.
    double kernel_margin = 0.0;
    bool whitney_rank_ok = true;     // [B·dF | T] has full rank n everywhere
    bool transversality_ok = true;   // rank(T + im B) = n everywhere
    bool leaf_split_ok = true;       // dim(T ∩ im B) + k = rank B, direct sum
    std::string detail;
};

/// Pointwise verification of the cosymplectic decomposition properties:
/// conormal kernel triviality, the Whitney sum T_sM = B#((T_sS)°) ⊕ T_sS,
/// transversality of leaves, and the leaf split
/// T_sL = (T_sS ∩ T_sL) ⊕ B#((T_sS)°).
DecompositionReport cosymplectic_decomposition_checks(const ConstraintSet& C,
                                                      const std::vector<SurfaceSample>& samples,
                                                      double rank_rel_tol = 1e-10);

struct ReducibilityReport : CheckReport {
    bool rank_jumps = false;
    int distribution_rank = -1;
    int failures = 0; // samples where membership fails
};

/// Pointwise regular-reducibility criterion: B^sharp(D°) ⊂ T_sS + D(s)
/// at every sample, tested by rank comparison.
ReducibilityReport regular_reducibility_check(const PoissonStructure& P, const ConstraintSet& C,
                                              const std::vector<VectorFieldExpr>& d_basis,
                                              const std::vector<SurfaceSample>& samples,
                                              double rank_rel_tol = 1e-10);

} // namespace preduce

#endif
