#pragma once

#include <cmath>
#include <vector>

namespace dbmm {

// In-place normalization of a nonnegative vector to unit sum. Throws
// DegenerateBelief if the total mass is below `floor` (all hypotheses
// effectively ruled out).
void normalize(std::vector<double>& v, double floor = 1e-300);

// Returns a normalized copy.
std::vector<double> normalized(const std::vector<double>& v, double floor = 1e-300);

// log(sum_i exp(x_i)) with the usual max-shift trick; empty input throws.
double log_sum_exp(const std::vector<double>& x);

// Unit vector e_i of length n.
std::vector<double> one_hot(int i, int n);

// Numerically safe softplus: log(1 + e^x) without overflow for large x.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Sum, dot and squared-norm convenience wrappers over the kernel layer.
double vec_sum(const std::vector<double>& v);
double vec_dot(const std::vector<double>& a, const std::vector<double>& b);

} // namespace dbmm
