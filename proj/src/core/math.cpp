#include "dbmm/core/math.hpp"

#include <algorithm>

#include "dbmm/core/errors.hpp"
#include "dbmm/kernels/kernels.hpp"

namespace dbmm {

void normalize(std::vector<double>& v, double floor) {
    if (v.empty()) throw EmptyInput("normalize: empty vector");
    for (double x : v) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw DegenerateBelief("normalize: weights must be finite and nonnegative");
        }
    }
    const double total = kernels::sum(v.data(), v.size());
    if (!(total > floor)) {
        throw DegenerateBelief("normalize: total mass " + std::to_string(total) +
                               " is not above floor");
    }
    const double inv = 1.0 / total;
    for (auto& x : v) x *= inv;
}

std::vector<double> normalized(const std::vector<double>& v, double floor) {
    std::vector<double> out = v;
    normalize(out, floor);
    return out;
}

double log_sum_exp(const std::vector<double>& x) {
    if (x.empty()) throw EmptyInput("log_sum_exp: empty vector");
    const double m = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(m)) return m; // all -inf (or a stray +inf/nan) dominates
    double acc = 0.0;
    for (double xi : x) acc += std::exp(xi - m);
    return m + std::log(acc);
}

std::vector<double> one_hot(int i, int n) {
    if (n <= 0) throw ShapeError("one_hot: n must be positive");
    if (i < 0 || i >= n) throw IndexError("one_hot: index " + std::to_string(i) +
                                          " out of range for length " + std::to_string(n));
    std::vector<double> v(static_cast<size_t>(n), 0.0);
    v[static_cast<size_t>(i)] = 1.0;
    return v;
}

double vec_sum(const std::vector<double>& v) {
    return kernels::sum(v.data(), v.size());
}

double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("vec_dot: size mismatch");
    return kernels::dot(a.data(), b.data(), a.size());
}

} // namespace dbmm
