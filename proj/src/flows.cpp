#include "preduce/flows.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace preduce {

const std::vector<double>* Trajectory::channel(const std::string& name) const {
    for (std::size_t i = 0; i < diagnostic_names.size(); ++i)
        if (diagnostic_names[i] == name) return &diagnostics[i];
    return nullptr;
}

namespace {

using Field = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::VectorXd rk4_step(const Field& f, const Eigen::VectorXd& z, double dt) {
    Eigen::VectorXd k1 = f(z);
    Eigen::VectorXd k2 = f(z + 0.5 * dt * k1);
    Eigen::VectorXd k3 = f(z + 0.5 * dt * k2);
    Eigen::VectorXd k4 = f(z + dt * k3);
    return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// The grid must end exactly at T and stay uniform, so the step is the
// closest divisor-step to the requested dt (unchanged whenever T/dt is
// integral).
struct Grid {
    long long steps;
    double dt;
};

Grid make_grid(const IntegratorConfig& cfg) {
    if (cfg.dt <= 0.0) throw StructureError("integrator requires dt > 0");
    if (cfg.T < 0.0) throw StructureError("integrator requires T >= 0");
    long long steps = std::llround(cfg.T / cfg.dt);
    if (steps <= 0) return {0, cfg.dt};
    return {steps, cfg.T / static_cast<double>(steps)};
}

} // namespace

Trajectory integrate(const PoissonStructure& P, const Expression& h, const Eigen::VectorXd& z0,
                     const IntegratorConfig& cfg, const TrackedQuantities& tracked) {
    if (z0.size() != P.dimension()) throw StructureError("initial point dimension differs from the chart");
    VectorFieldExpr X = hamiltonian_vector_field(P, h);
    Field f = [&X](const Eigen::VectorXd& z) { return X.evaluate(z); };

    Trajectory traj;
    traj.hamiltonian = h;
    traj.diagnostic_names.push_back("energy");
    for (const auto& [name, e] : tracked) traj.diagnostic_names.push_back(name);
    traj.diagnostics.resize(traj.diagnostic_names.size());

    auto record = [&](double t, const Eigen::VectorXd& z) {
        traj.times.push_back(t);
        traj.states.push_back(z);
        traj.diagnostics[0].push_back(evaluate(h, z));
        for (std::size_t i = 0; i < tracked.size(); ++i)
            traj.diagnostics[i + 1].push_back(evaluate(tracked[i].second, z));
    };

    const Grid grid = make_grid(cfg);
    Eigen::VectorXd z = z0;
    record(0.0, z);
    for (long long i = 1; i <= grid.steps; ++i) {
        try {
            z = rk4_step(f, z, grid.dt);
            if (!z.allFinite()) throw EvalError("state became non-finite");
            record(static_cast<double>(i) * grid.dt, z);
        } catch (const EvalError& err) {
            traj.truncated = true;
            traj.error = err.what();
            break;
        }
    }
    return traj;
}

Trajectory integrate_constrained(const DiracPtr& D, const Expression& h, const SurfaceSample& s0,
                                 const IntegratorConfig& cfg, const TrackedQuantities& tracked) {
    const ConstraintSet& C = D->constraints();
    if (C.residual(s0.z).cwiseAbs().maxCoeff() > 1e-10)
        throw StructureError("constrained flow requires an initial point on the constraint surface");
    DiracFieldExpr X(D, h);
    Field f = [&X](const Eigen::VectorXd& z) { return X.evaluate(z); };

    Trajectory traj;
    traj.hamiltonian = h;
    traj.diagnostic_names = {"energy", "constraint_residual", "tangency"};
    for (const auto& [name, e] : tracked) traj.diagnostic_names.push_back(name);
    traj.diagnostics.resize(traj.diagnostic_names.size());

    auto record = [&](double t, const Eigen::VectorXd& z, double tangency) {
        traj.times.push_back(t);
        traj.states.push_back(z);
        traj.diagnostics[0].push_back(evaluate(h, z));
        traj.diagnostics[1].push_back(C.residual(z).cwiseAbs().maxCoeff());
        traj.diagnostics[2].push_back(tangency);
        for (std::size_t i = 0; i < tracked.size(); ++i)
            traj.diagnostics[i + 3].push_back(evaluate(tracked[i].second, z));
    };

    NewtonOptions proj;
    proj.tolerance = cfg.projection_tolerance;
    proj.max_iterations = cfg.max_projection_iterations;

    const Grid grid = make_grid(cfg);
    Eigen::VectorXd z = s0.z;
    record(0.0, z, 0.0);
    for (long long i = 1; i <= grid.steps; ++i) {
        try {
            // tangency of the field before stepping/projection
            double tangency = (C.jacobian(z) * f(z)).cwiseAbs().maxCoeff();
            z = rk4_step(f, z, grid.dt);
            if (cfg.method == IntegratorConfig::Method::ProjectedRk4) z = project_to_surface(C, z, proj);
            if (!z.allFinite()) throw EvalError("state became non-finite");
            record(static_cast<double>(i) * grid.dt, z, tangency);
        } catch (const EvalError& err) {
            traj.truncated = true;
            traj.error = err.what();
            break;
        } catch (const NumericalError& err) {
            traj.truncated = true;
            traj.error = err.what();
            break;
        }
    }
    return traj;
}

PreservationReport bracket_preservation_check(const PoissonStructure& P, const Expression& h,
                                              const Eigen::VectorXd& z0, double t, double dt,
                                              double probe_scale, double tol) {
    PreservationReport rep;
    rep.tolerance = tol;
    const int n = P.dimension();
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.T = t;

    auto flow = [&](const Eigen::VectorXd& z) {
        Trajectory traj = integrate(P, h, z, cfg);
        if (traj.truncated) throw NumericalError("flow map evaluation failed: " + traj.error);
        return traj.states.back();
    };

    auto jacobian_with_probe = [&](double probe) {
        Eigen::MatrixXd J(n, n);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd zp = z0, zm = z0;
            zp[i] += probe;
            zm[i] -= probe;
            J.col(i) = (flow(zp) - flow(zm)) / (2.0 * probe);
        }
        return J;
    };

    Eigen::VectorXd zt = flow(z0);
    Eigen::MatrixXd B0 = P.tensor_at(z0);
    Eigen::MatrixXd Bt = P.tensor_at(zt);

    Eigen::MatrixXd J = jacobian_with_probe(probe_scale);
    rep.jacobian_norm = J.norm();
    if (rep.jacobian_norm > 1e6) {
        rep.skipped = true;
        rep.detail = "chaotic amplification detected (|J| > 1e6); check skipped";
        return rep;
    }
    double resid = (J * B0 * J.transpose() - Bt).cwiseAbs().maxCoeff();

    if (resid > 0.2 * tol) {
        // Richardson refinement from a halved probe.
        Eigen::MatrixXd J2 = jacobian_with_probe(probe_scale / 2.0);
        Eigen::MatrixXd Jr = (4.0 * J2 - J) / 3.0;
        double r2 = (Jr * B0 * Jr.transpose() - Bt).cwiseAbs().maxCoeff();
        resid = std::min(resid, r2);
    }

    rep.worst = resid;
    rep.passed = resid <= tol;
    rep.detail = rep.passed ? "flow map preserves the tensor within tolerance"
                            : "bracket preservation residual exceeds tolerance";
    return rep;
}

ConservationReport conservation_report(const PoissonStructure& P, const Trajectory& traj,
                                       const TrackedQuantities& tracked) {
    ConservationReport rep;
    if (traj.states.empty()) return rep;
    const Eigen::VectorXd& z0 = traj.states.front();
    for (const auto& [name, f] : tracked) {
        ConservationEntry e;
        e.name = name;
        e.initial = evaluate(f, z0);
        for (const auto& z : traj.states) e.drift = std::max(e.drift, std::abs(evaluate(f, z) - e.initial));
        if (traj.hamiltonian) {
            Expression fh = bracket(P, f, *traj.hamiltonian);
            e.bracket_residual = std::abs(evaluate(fh, z0));
            if (e.bracket_residual <= 1e-12)
                e.classification = "conserved by bracket";
            else if (e.drift <= 1e-7)
                e.classification = "numerically conserved";
            else
                e.classification = "drifting";
        } else {
            e.bracket_residual = std::numeric_limits<double>::quiet_NaN();
            e.classification = e.drift <= 1e-7 ? "numerically conserved" : "drifting";
        }
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

} // namespace preduce
