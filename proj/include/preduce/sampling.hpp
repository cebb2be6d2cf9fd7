#ifndef PREDUCE_SAMPLING_HPP
#define PREDUCE_SAMPLING_HPP

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "preduce/expr.hpp"

namespace preduce {

/// Seeded random source with portable uniform doubles (mt19937_64 bits
/// mapped to [0,1) explicitly, so output does not depend on the standard
/// library's distribution implementations).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

/// Axis-aligned sampling box, uniform or per-coordinate.
struct Box {
    Eigen::VectorXd lo, hi;

    static Box cube(int n, double l, double h);
    bool contains(const Eigen::VectorXd& x) const;
};

std::vector<Eigen::VectorXd> sample_box(const Box& box, int count, Rng& rng);
std::vector<Point> sample_box(const ChartPtr& chart, const Box& box, int count, Rng& rng);

/// Random polynomial over the chart with uniform coefficients on all
/// monomials of total degree <= degree.
Expression random_polynomial(const ChartPtr& chart, int degree, Rng& rng, double lo = -1.0,
                             double hi = 1.0);

} // namespace preduce

#endif
