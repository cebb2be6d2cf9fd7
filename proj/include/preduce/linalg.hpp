#ifndef PREDUCE_LINALG_HPP
#define PREDUCE_LINALG_HPP

#include <Eigen/Dense>

namespace preduce {

/// Numerical rank: singular values above rel_tol * largest.
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

/// Orthonormal basis of the null space of m (columns). Empty matrix with
/// m.cols() rows when the null space is trivial.
Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

/// Orthonormal basis of the column space of m.
Eigen::MatrixXd column_space_basis(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

/// 2-norm condition number (sigma_max / sigma_min over min(rows,cols)
/// singular values); +inf for singular input.
double condition_number(const Eigen::MatrixXd& m);

/// Largest residual norm of projecting the columns of `vectors` onto
/// span(columns of basis), relative to 1 + column norm.
double subspace_membership_residual(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& vectors);

/// Orthonormal basis of span(A columns) ∩ span(B columns), via the null
/// space of [A  -B].
Eigen::MatrixXd intersection_basis(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                   double rel_tol = 1e-10);

} // namespace preduce

#endif
