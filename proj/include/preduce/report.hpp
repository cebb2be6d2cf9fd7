#ifndef PREDUCE_REPORT_HPP
#define PREDUCE_REPORT_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

namespace preduce {

/// Outcome of a sampled verification: worst residual with its witness.
/// Checks report rather than throw; "passed" is worst <= tolerance.
struct CheckReport {
    bool passed = false;
    double worst = 0.0;
    double tolerance = 0.0;
    Eigen::VectorXd witness;
    std::string detail;

    void absorb(double residual, const Eigen::VectorXd& where) {
        if (residual >= worst) {
            worst = residual;
            witness = where;
        }
    }
    void finalize(double tol) {
        tolerance = tol;
        passed = worst <= tol;
    }
};

} // namespace preduce

#endif
