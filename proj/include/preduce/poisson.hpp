#ifndef PREDUCE_POISSON_HPP
#define PREDUCE_POISSON_HPP

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "preduce/expr.hpp"
#include "preduce/report.hpp"
#include "preduce/sampling.hpp"

namespace preduce {

/// Chart-bound vector field with symbolic components.
struct VectorFieldExpr {
    ChartPtr chart;
    std::vector<Expression> components;

    VectorFieldExpr() = default;
    VectorFieldExpr(ChartPtr c, std::vector<Expression> comps);

    Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
};

/// Smooth map between charts, given by target components over the
/// source chart.
class SmoothMap {
public:
    SmoothMap(ChartPtr source, ChartPtr target, std::vector<Expression> components);

    const ChartPtr& source() const { return source_; }
    const ChartPtr& target() const { return target_; }
    const std::vector<Expression>& components() const { return components_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    /// Exact Jacobian (from symbolic gradients) evaluated at x.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
    /// Pullback f∘φ of a function over the target chart.
    Expression pullback(const Expression& f) const;

    static SmoothMap identity(const ChartPtr& chart);

private:
    ChartPtr source_, target_;
    std::vector<Expression> components_;
    std::vector<std::vector<Expression>> jacobian_entries_; // m x n
};

struct PoissonOptions {
    double antisymmetry_tol = 1e-14; // numeric spot check
    double jacobi_tol = 1e-9;
    int validation_points = 50;
    double box_lo = -2.0, box_hi = 2.0;
    std::uint64_t seed = 42;
    double rank_rel_tol = 1e-10;
    /// When set, antisymmetry/Jacobi are validated at these points
    /// instead of box samples (used for structures only defined on the
    /// image of an invariant map).
    std::optional<std::vector<Eigen::VectorXd>> validation_samples;
    /// Degree cap for the exact polynomial Jacobi proof.
    int symbolic_jacobi_max_degree = 4;
};

/// Poisson structure on a chart: the antisymmetric matrix of expressions
/// B^{ij} = {x^i, x^j}.
///
/// Sign conventions, fixed throughout:
///   {f,g}   = sum_ij B^{ij} (df/dx^i) (dg/dx^j)
///   B^sharp(alpha) = B * alpha (as a matrix-vector product), so that
///   {f,g} = <df, B^sharp dg> and X_h = B^sharp dh, X_h[f] = {f,h}.
///
/// The constructor validates antisymmetry symbolically
/// (simplify(B^{ij} + B^{ji}) must be the zero expression) and the
/// Jacobi identity either exactly (polynomial entries of total degree
/// <= 4, expanded normal form) or numerically at seeded sample points.
class PoissonStructure {
public:
    PoissonStructure(ChartPtr chart, std::vector<std::vector<Expression>> entries,
                     PoissonOptions options = {});

    /// Build from strict upper-triangle entries (i < j); the lower
    /// triangle is the negation, the diagonal zero.
    static PoissonStructure from_upper_triangle(
        ChartPtr chart, const std::vector<std::tuple<int, int, Expression>>& upper,
        PoissonOptions options = {});

    const ChartPtr& chart() const { return chart_; }
    int dimension() const { return chart_->dimension(); }
    const Expression& entry(int i, int j) const;
    const PoissonOptions& options() const { return options_; }
    /// True when the Jacobi identity was proved by polynomial expansion
    /// rather than sampled.
    bool jacobi_proved_symbolically() const { return jacobi_symbolic_; }

    /// B(z) as a numeric matrix.
    Eigen::MatrixXd tensor_at(const Eigen::VectorXd& x) const;
    /// d B^{jk} / dx^l, cached symbolically at construction.
    const Expression& entry_derivative(int l, int j, int k) const;

private:
    ChartPtr chart_;
    std::vector<std::vector<Expression>> entries_;
    std::vector<Expression> entry_derivs_; // flattened l*(n*n) + j*n + k
    PoissonOptions options_;
    bool jacobi_symbolic_ = false;

    void validate();
};

using PoissonPtr = std::shared_ptr<const PoissonStructure>;

/// {f,g} as an expression (simplified).
Expression bracket(const PoissonStructure& P, const Expression& f, const Expression& g);

/// X_h with components sum_j B^{ij} dh/dx^j.
VectorFieldExpr hamiltonian_vector_field(const PoissonStructure& P, const Expression& h);

/// max over i<j<k of |cyclic Jacobi sum| at z; zero for genuine Poisson
/// tensors.
double jacobi_residual(const PoissonStructure& P, const Eigen::VectorXd& z);

/// Jacobi residual of raw entries (no construction/validation); used to
/// diagnose candidate structures before building them.
double jacobi_residual_of_entries(const ChartPtr& chart,
                                  const std::vector<std::vector<Expression>>& entries,
                                  const Eigen::VectorXd& z);

struct CasimirReport : CheckReport {
    /// Index of the coordinate with the worst bracket residual.
    int worst_coordinate = -1;
};

/// f is a Casimir iff max_i |{x^i,f}(z)| stays below tol at every sample.
CasimirReport is_casimir(const PoissonStructure& P, const Expression& f,
                         const std::vector<Eigen::VectorXd>& samples, double tol = 1e-10);

/// Numerical rank of B(z); even at every point of a Poisson manifold.
int characteristic_rank(const PoissonStructure& P, const Eigen::VectorXd& z);

struct PoissonMapReport : CheckReport {
    CheckReport bracket_check;  // pullback bracket identity
    CheckReport field_check;    // T(phi) X_{h∘phi} = X_h ∘ phi
    int pairs_tested = 0;
};

/// Checks phi*{g,h}_2 = {phi*g, phi*h}_1 over a family of monomial test
/// pairs (all coordinate pairs plus seeded random quadratic monomials),
/// and the equivalent tangent-map relation via the exact Jacobian.
PoissonMapReport check_poisson_map(const SmoothMap& phi, const PoissonStructure& P1,
                                   const PoissonStructure& P2,
                                   const std::vector<Eigen::VectorXd>& samples,
                                   double tol = 1e-10, std::uint64_t seed = 42);

PoissonMapReport check_canonical_action(const std::vector<SmoothMap>& maps,
                                        const PoissonStructure& P,
                                        const std::vector<Eigen::VectorXd>& samples,
                                        double tol = 1e-10, std::uint64_t seed = 42);

struct DistributionReport : CheckReport {
    int annihilating_family_size = 0; // polynomial solutions found (beyond constants)
    bool rank_constant = true;
    std::string note;
};

/// Pointwise surrogate of the Poisson-distribution condition: builds
/// polynomial pairs (degree <= 2) whose differentials annihilate the
/// span at the samples and verifies d{f,g} annihilates it as well.
/// Evidence at the samples, not a proof.
DistributionReport check_poisson_distribution(const PoissonStructure& P,
                                              const std::vector<VectorFieldExpr>& spanning_fields,
                                              const std::vector<Eigen::VectorXd>& samples,
                                              double tol = 1e-8, std::uint64_t seed = 42);

// Built-in structures.
/// Canonical structure on (q1..qm, p1..pm) plus optional extra trivial
/// coordinates: {q_i, p_i} = 1.
PoissonStructure canonical_structure(int pairs, int extra_trivial = 0, PoissonOptions options = {});
/// Lie-Poisson structure on so(3)*: B^{ij} = -eps_{ijk} x_k.
PoissonStructure so3_structure(PoissonOptions options = {});
/// Product structure on the concatenated chart (block diagonal tensor).
PoissonStructure direct_sum(const PoissonStructure& a, const PoissonStructure& b,
                            PoissonOptions options = {});

} // namespace preduce

#endif
