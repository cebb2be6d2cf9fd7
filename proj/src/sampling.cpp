#include "preduce/sampling.hpp"

#include "preduce/polynomial.hpp"

namespace preduce {

Box Box::cube(int n, double l, double h) {
    Box b;
    b.lo = Eigen::VectorXd::Constant(n, l);
    b.hi = Eigen::VectorXd::Constant(n, h);
    return b;
}

bool Box::contains(const Eigen::VectorXd& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

std::vector<Eigen::VectorXd> sample_box(const Box& box, int count, Rng& rng) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(count));
    const Eigen::Index n = box.lo.size();
    for (int k = 0; k < count; ++k) {
        Eigen::VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<Point> sample_box(const ChartPtr& chart, const Box& box, int count, Rng& rng) {
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(count));
    for (auto& x : sample_box(box, count, rng)) out.emplace_back(chart, std::move(x));
    return out;
}

Expression random_polynomial(const ChartPtr& chart, int degree, Rng& rng, double lo, double hi) {
    Polynomial p(chart->dimension());
    for (const auto& m : monomials_up_to_degree(chart->dimension(), degree))
        p.add_term(m, rng.uniform(lo, hi));
    return p.to_expression(chart);
}

} // namespace preduce
