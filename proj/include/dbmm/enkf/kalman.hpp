#pragma once

#include <vector>

#include "dbmm/core/types.hpp"

namespace dbmm {

// Scalar linear-Gaussian state-space model:
//   x_{t+1} = a * x_t + N(0, q^2)
//   o_t     = h * x_t + N(0, r^2)
// with x_0 ~ N(initial_mean, initial_std^2). Used as an exact oracle for
// validating the ensemble filter.
struct LinearGaussianSpec {
    double a = 1.0;
    double q = 0.1; // transition noise std
    double h = 1.0;
    double r = 0.1; // observation noise std
    double initial_mean = 0.0;
    double initial_std = 1.0;

    void validate() const; // q, r, initial_std > 0
};

// Exact filter. observations[t] observes state t; the state-0 prior is the
// spec's initial distribution, so the first belief is an update without a
// predict. Returns one posterior per observation.
std::vector<GaussianBelief> kalman_filter(const LinearGaussianSpec& spec,
                                          const std::vector<double>& observations);

} // namespace dbmm
