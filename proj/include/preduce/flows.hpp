#ifndef PREDUCE_FLOWS_HPP
#define PREDUCE_FLOWS_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "preduce/dirac.hpp"
#include "preduce/poisson.hpp"

namespace preduce {

struct IntegratorConfig {
    enum class Method { Rk4, ProjectedRk4 };
    Method method = Method::Rk4;
    double dt = 1e-3;
    double T = 1.0;
    double projection_tolerance = 1e-13; // Newton target when projecting back to S
    int max_projection_iterations = 50;
};

/// Fixed-step trajectory with per-step diagnostics. A trajectory that
/// hit an evaluation or projection failure is truncated at the last
/// valid time and carries the error text.
struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<std::string> diagnostic_names;
    std::vector<std::vector<double>> diagnostics; // [channel][step]
    std::optional<Expression> hamiltonian;
    bool truncated = false;
    std::string error;

    double last_valid_time() const { return times.empty() ? 0.0 : times.back(); }
    const std::vector<double>* channel(const std::string& name) const;
};

using TrackedQuantities = std::vector<std::pair<std::string, Expression>>;

/// Classical RK4 on zdot = X_h(z). Records an "energy" channel plus one
/// channel per tracked quantity.
Trajectory integrate(const PoissonStructure& P, const Expression& h, const Eigen::VectorXd& z0,
                     const IntegratorConfig& cfg, const TrackedQuantities& tracked = {});

/// RK4 on the Dirac field of h, with optional Newton projection back to
/// S after every step (Method::ProjectedRk4). Records constraint
/// residual and pre-projection tangency channels.
Trajectory integrate_constrained(const DiracPtr& D, const Expression& h, const SurfaceSample& s0,
                                 const IntegratorConfig& cfg, const TrackedQuantities& tracked = {});

struct PreservationReport {
    bool passed = false;
    bool skipped = false; // chaotic amplification detected
    double worst = 0.0;   // entrywise |J B(z0) J^T - B(phi_t(z0))|
    double jacobian_norm = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

/// Finite-difference Jacobian of the time-t flow map at z0 (central
/// differences, Richardson refinement near the tolerance); verifies
/// J B(z0) J^T = B(phi_t(z0)) entrywise. Flows of Hamiltonian fields
/// are Poisson maps, so this measures integrator bracket drift.
PreservationReport bracket_preservation_check(const PoissonStructure& P, const Expression& h,
                                              const Eigen::VectorXd& z0, double t, double dt,
                                              double probe_scale = 1e-5, double tol = 1e-5);

struct ConservationEntry {
    std::string name;
    double initial = 0.0;
    double drift = 0.0;             // max_t |f(z(t)) - f(z(0))|
    double bracket_residual = 0.0;  // |{f,h}|(z0), when h is known
    std::string classification;     // "conserved by bracket" / "numerically conserved" / "drifting"
};

struct ConservationReport {
    std::vector<ConservationEntry> entries;
};

/// Drift of each tracked quantity along the trajectory, paired with the
/// a-priori bracket residual so reports distinguish structural
/// conservation from numerical coincidence.
ConservationReport conservation_report(const PoissonStructure& P, const Trajectory& traj,
                                       const TrackedQuantities& tracked);

} // namespace preduce

#endif
