#ifndef PREDUCE_PROBLEM_HPP
#define PREDUCE_PROBLEM_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "preduce/quotient.hpp"
#include "preduce/submanifold.hpp"

namespace preduce {

/// Tolerance overrides from the definition file; unset fields keep the
/// library defaults.
struct ToleranceOverrides {
    std::optional<double> antisymmetry;
    std::optional<double> jacobi;
    std::optional<double> rank;
    std::optional<double> check; // generic residual tolerance for CLI checks
};

struct QuotientSection {
    std::vector<std::string> generator_names;
    std::vector<Expression> generators; // over the ambient chart
    ChartPtr reduced_chart;
    std::vector<std::vector<Expression>> closure; // full antisymmetric matrix
    std::vector<Expression> relations;
    std::optional<Expression> reduced_hamiltonian; // over the reduced chart
    std::vector<SmoothMap> action_maps;            // finite family (sampled for 1-parameter groups)
};

/// Parsed problem-definition file ("schema": 1). Expressions are kept
/// raw so validation commands can report granular failures before any
/// structure is constructed.
struct ProblemDefinition {
    int schema = 1;
    ChartPtr chart;
    std::vector<std::vector<Expression>> tensor_entries; // full n x n
    std::optional<Expression> hamiltonian;
    std::vector<std::pair<std::string, Expression>> casimirs;
    std::map<std::string, std::vector<Expression>> constraints;
    std::vector<Eigen::VectorXd> seeds;
    Box sample_box;
    std::optional<std::vector<Eigen::VectorXd>> validation_points;
    std::vector<std::pair<std::string, Expression>> tracked;
    ToleranceOverrides tolerances;
    std::optional<QuotientSection> quotient;

    PoissonOptions poisson_options(std::uint64_t seed) const;
    /// Construct and validate the Poisson structure (throws StructureError).
    PoissonPtr build_structure(std::uint64_t seed) const;
    std::shared_ptr<ConstraintSet> build_constraint_set(const std::string& name,
                                                        const PoissonPtr& P) const;
    QuotientSpec build_quotient(const PoissonPtr& P) const;
};

/// Load and fully parse a definition file. Throws StructureError /
/// ParseError with file-position context on malformed input.
ProblemDefinition load_problem(const std::string& path);
ProblemDefinition parse_problem(const std::string& json_text);

/// Serialize a reduced system as a round-trippable definition file.
std::string render_reduced_problem(const QuotientSpec& Q, const PoissonStructure& reduced,
                                   const std::optional<Expression>& reduced_hamiltonian,
                                   const std::vector<Eigen::VectorXd>& ambient_samples);

/// FNV-1a 64 digest of a byte string, as 16 hex characters.
std::string content_digest(const std::string& bytes);

// ---------------------------------------------------------------------------
// Run reports

struct CheckLine {
    std::string name;
    bool passed = false;
    std::optional<double> worst;
    std::optional<Eigen::VectorXd> witness;
    std::string detail;
};

/// Deterministic command report: identical input and seed produce
/// byte-identical renderings (timing is never part of the report).
struct RunReport {
    std::string command;
    std::string input_name; // basename only, paths stay out of reports
    std::string digest;
    std::uint64_t seed = 42;
    std::vector<CheckLine> checks;

    void add(CheckLine line) { checks.push_back(std::move(line)); }
    bool overall() const;
    std::string render_text() const;
    std::string render_json() const;
};

/// Full-precision float text (17 significant digits), the format used
/// in reports and CSV.
std::string format_full(double v);
std::string format_point(const Eigen::VectorXd& z, const ChartPtr& chart);

/// CSV with columns t, coordinates..., extra channels; all values at
/// full precision.
std::string trajectory_csv(const Trajectory& traj, const ChartPtr& chart,
                           const std::vector<std::string>& extra_channels);

} // namespace preduce

#endif
