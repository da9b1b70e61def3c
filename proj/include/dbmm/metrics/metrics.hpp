#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbmm/core/types.hpp"

namespace dbmm {

// One metric tracked across evaluation loops.
struct MetricReport {
    std::string name;
    std::vector<double> values;           // one entry per evaluation
    std::vector<double> per_class;        // optional breakdown (empty if n/a)
};

// Mean over t of -log b_t[s_t], probabilities floored at 1e-12.
double cross_entropy(const std::vector<CategoricalBelief>& beliefs,
                     const std::vector<int>& states);

// KL(point mass at s_t || b_t) averaged over t — identical to cross_entropy;
// kept under the name the evaluation tables use.
double kl_to_onehot(const std::vector<CategoricalBelief>& beliefs,
                    const std::vector<int>& states);

// Per-class accuracy: for each class c, the fraction of steps with s_t = c
// where argmax b_t = c (ties toward the lowest index). Classes that never
// occur get accuracy NaN and count 0.
struct McaResult {
    std::vector<double> accuracy;
    std::vector<int64_t> count;
};
McaResult mca(const std::vector<CategoricalBelief>& beliefs,
              const std::vector<int>& states, int n_classes);

double mse(const std::vector<double>& point_estimates,
           const std::vector<double>& states);

// Mean closed-form KL(pred_t || truth_t) between univariate Gaussians.
double kl_gaussian_sequence(const std::vector<GaussianBelief>& pred,
                            const std::vector<GaussianBelief>& truth);

// Calibration diagnostic: u_t = Phi((s_t - mean_t)/std_t), ECDF of {u_t} on
// a 0.01-spaced grid over [0,1] (101 points), and the exact
// Kolmogorov-Smirnov distance of the sample to the uniform diagonal.
struct ReliabilityCurve {
    std::vector<double> grid;
    std::vector<double> cdf;
    double ks = 0.0;
};
ReliabilityCurve reliability_curve(const std::vector<GaussianBelief>& beliefs,
                                   const std::vector<double>& states);

} // namespace dbmm
