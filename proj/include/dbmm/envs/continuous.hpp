#pragma once

#include <utility>

#include "dbmm/core/rng.hpp"
#include "dbmm/core/types.hpp"

namespace dbmm {

// Continuous maintenance benchmark. State is a scalar condition (fresh
// component ~0.96, failed <= 0), action a in [0,1] interpolates between
// pure deterioration (a=0) and full replacement (a=1).
struct ContinuousMaintenanceModel {
    double replacement_mean = 0.96;
    double replacement_std = 0.02;
    double obs_noise_coeff = 0.005; // std of o|s is coeff * exp(s)
};

// Deterioration process moments:
//   mean = max(0, s - 0.5*exp(-5s) - 1)
//   std  = (max(0,s) - max(0,mean))/2 + 0.02
std::pair<double, double> cont_deterioration(double s);

// The exact next-state Gaussian for (s, a): means and stds of replacement
// and deterioration blended linearly with weights (a, 1-a).
GaussianBelief cont_true_next_distribution(double s, double a,
                                           const ContinuousMaintenanceModel& model = {});

// Observation of a given state: o ~ Normal(s, 0.005*exp(s)) (std).
double cont_observe(double s, const ContinuousMaintenanceModel& model, RngStream& rng);

// One transition: next_state ~ the blended Gaussian, observation attached
// to the new state. Returns (next_state, observation).
std::pair<double, double> cont_step(double s, double a,
                                    const ContinuousMaintenanceModel& model,
                                    RngStream& rng);

} // namespace dbmm
