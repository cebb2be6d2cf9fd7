#include "preduce/linalg.hpp"

#include <limits>

namespace preduce {

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    double cutoff = rel_tol * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    return rank;
}

Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& m, double rel_tol) {
    if (m.cols() == 0) return Eigen::MatrixXd(0, 0);
    if (m.rows() == 0) return Eigen::MatrixXd::Identity(m.cols(), m.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double largest = sv.size() > 0 ? sv(0) : 0.0;
    double cutoff = rel_tol * largest;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (largest > 0.0 && sv(i) > cutoff) ++rank;
    return svd.matrixV().rightCols(m.cols() - rank);
}

Eigen::MatrixXd column_space_basis(const Eigen::MatrixXd& m, double rel_tol) {
    if (m.rows() == 0 || m.cols() == 0) return Eigen::MatrixXd(m.rows(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    double largest = sv.size() > 0 ? sv(0) : 0.0;
    double cutoff = rel_tol * largest;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (largest > 0.0 && sv(i) > cutoff) ++rank;
    return svd.matrixU().leftCols(rank);
}

double condition_number(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / sv(sv.size() - 1);
}

double subspace_membership_residual(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& vectors) {
    Eigen::MatrixXd q = column_space_basis(basis);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        Eigen::VectorXd v = vectors.col(j);
        Eigen::VectorXd r = q.cols() > 0 ? Eigen::VectorXd(v - q * (q.transpose() * v)) : v;
        worst = std::max(worst, r.norm() / (1.0 + v.norm()));
    }
    return worst;
}

Eigen::MatrixXd intersection_basis(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel_tol) {
    if (a.cols() == 0 || b.cols() == 0) return Eigen::MatrixXd(a.rows(), 0);
    Eigen::MatrixXd stacked(a.rows(), a.cols() + b.cols());
    stacked << a, -b;
    Eigen::MatrixXd ns = null_space_basis(stacked, rel_tol);
    if (ns.cols() == 0) return Eigen::MatrixXd(a.rows(), 0);
    Eigen::MatrixXd inter = a * ns.topRows(a.cols());
    return column_space_basis(inter, rel_tol);
}

} // namespace preduce
