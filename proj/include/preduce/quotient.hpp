#ifndef PREDUCE_QUOTIENT_HPP
#define PREDUCE_QUOTIENT_HPP

#include <memory>
#include <optional>
#include <vector>

#include "preduce/flows.hpp"
#include "preduce/poisson.hpp"

namespace preduce {

/// Quotient of a free canonical action, represented by its invariant
/// generators: p_a descend to coordinates y_a on the image, the
/// user-supplied closure relations Lambda_ab(y) give the reduced
/// tensor, and optional relation expressions R_c(y) cut the image.
/// Free/properness of the action is the caller's responsibility;
/// everything here is sampled verification, not proof.
class QuotientSpec {
public:
    QuotientSpec(PoissonPtr ambient, std::vector<SmoothMap> action_maps,
                 std::vector<Expression> generators, ChartPtr reduced_chart,
                 std::vector<std::vector<Expression>> closure,
                 std::vector<Expression> relations = {});

    const PoissonStructure& ambient() const { return *ambient_; }
    const PoissonPtr& ambient_ptr() const { return ambient_; }
    const std::vector<SmoothMap>& action() const { return action_; }
    const std::vector<Expression>& generators() const { return generators_; }
    int generator_count() const { return static_cast<int>(generators_.size()); }
    const ChartPtr& reduced_chart() const { return reduced_chart_; }
    const std::vector<std::vector<Expression>>& closure() const { return closure_; }
    const std::vector<Expression>& relations() const { return relations_; }
    /// Cached ambient bracket {p_a, p_b}.
    const Expression& generator_bracket(int a, int b) const;

    /// The invariant map p: M -> R^m at a point.
    Eigen::VectorXd image_point(const Eigen::VectorXd& z) const;
    /// Compose a reduced-chart function with the invariant map.
    Expression pull_back(const Expression& f) const;

private:
    PoissonPtr ambient_;
    std::vector<SmoothMap> action_;
    std::vector<Expression> generators_;
    ChartPtr reduced_chart_;
    std::vector<std::vector<Expression>> closure_;
    std::vector<Expression> relations_;
    std::vector<std::vector<Expression>> generator_brackets_;
};

/// max |p_a(Phi(z)) - p_a(z)| over generators, action maps, samples.
CheckReport verify_invariance(const QuotientSpec& Q, const std::vector<Eigen::VectorXd>& samples,
                              double tol = 1e-10);

struct ClosureReport : CheckReport {
    int worst_a = -1, worst_b = -1;     // witness generator pair
    double reduced_jacobi_worst = 0.0;  // Jacobi residual of Lambda at image samples
};

/// |{p_a,p_b}(z) - Lambda_ab(p(z))| at all samples, plus the Jacobi
/// residual of the closure matrix at the pushed-forward samples.
ClosureReport verify_closure(const QuotientSpec& Q, const std::vector<Eigen::VectorXd>& samples,
                             double tol = 1e-10);

/// Reduced Poisson structure on the y-chart with B_red = Lambda,
/// validated (antisymmetry, Jacobi) at the image samples only — the
/// image may be a proper subset cut by the relations. Runs
/// verify_invariance and verify_closure first and throws on failure.
PoissonStructure build_reduced(const QuotientSpec& Q, const std::vector<Eigen::VectorXd>& samples,
                               double tol = 1e-10);

struct ReducedSystem {
    std::shared_ptr<const PoissonStructure> reduced;
    Expression ambient_hamiltonian;
    Expression reduced_hamiltonian; // [h] with [h]∘p = h on samples
};

/// Validates the descent identity |h_red(p(z)) - h(z)| <= tol at the
/// samples and packages the reduced dynamical system.
ReducedSystem reduce_hamiltonian(const QuotientSpec& Q, const Expression& h, const Expression& h_red,
                                 const std::vector<Eigen::VectorXd>& samples, double tol = 1e-10);

struct DynamicsReport {
    bool passed = false;
    double sup_deviation = 0.0; // sup_t |p(ambient(t)) - reduced(t)|
    double tolerance = 0.0;
    bool truncated = false;
    std::string detail;
};

/// Integrates the ambient flow of h from z0 and the reduced flow of [h]
/// from p(z0) on the same grid and reports the sup deviation of the
/// projected trajectory.
DynamicsReport compare_dynamics(const QuotientSpec& Q, const ReducedSystem& R, const Eigen::VectorXd& z0,
                                double T, double dt, double tol = 1e-6);

/// The defining characterization of the reduced bracket: for random
/// polynomial pairs (f,g) over the y-chart,
/// |{f,g}_red(p(z)) - {f∘p, g∘p}(z)| <= tol at every sample.
CheckReport check_reduction_identity(const QuotientSpec& Q, const PoissonStructure& reduced,
                                     const std::vector<Eigen::VectorXd>& samples, int pairs = 10,
                                     double tol = 1e-10, std::uint64_t seed = 42);

/// Casimir descent in the directly assertable form: c∘p commutes with
/// every g∘p at the samples.
CheckReport check_casimir_descent(const QuotientSpec& Q, const Expression& casimir,
                                  const std::vector<Eigen::VectorXd>& samples, int funcs = 6,
                                  double tol = 1e-10, std::uint64_t seed = 42);

struct DiscoveredClosure {
    std::vector<std::vector<Expression>> closure;
    double fit_residual = 0.0;   // worst |{p_a,p_b}(z) - fit(p(z))| on the samples
};

/// Least-squares closure discovery: fits each {p_a,p_b} by a polynomial
/// of degree <= max_degree in the invariants and keeps the answer only
/// when the sampled identity holds to `tol` exactly. Optional helper
/// behind the --discover flag; the normal path verifies user input.
std::optional<DiscoveredClosure> discover_closure(const PoissonStructure& ambient,
                                                  const std::vector<Expression>& generators,
                                                  const ChartPtr& reduced_chart,
                                                  const std::vector<Eigen::VectorXd>& samples,
                                                  int max_degree = 3, double tol = 1e-10);

} // namespace preduce

#endif
