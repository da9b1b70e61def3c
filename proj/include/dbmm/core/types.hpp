#pragma once

#include <cstdint>
#include <vector>

namespace dbmm {

// Categorical belief over discrete states: nonnegative, sums to 1.
using CategoricalBelief = std::vector<double>;

// Gaussian belief over a scalar latent state.
struct GaussianBelief {
    double mean = 0.0;
    double std = 1.0;
};

// One simulated episode. `states` holds the hidden truth (kept for oracle
// metrics, never shown to the learner), `observations` and `actions` are
// what filters see. Time layout: states/observations are indexed 0..T,
// actions 0..T-1 where actions[t] is taken between t and t+1.
template <typename StateT, typename ActionT, typename ObsT>
struct Trial {
    std::vector<StateT> states;
    std::vector<ObsT> observations;
    std::vector<ActionT> actions;
    uint64_t seed = 0; // stream identity this trial was rolled from

    int horizon() const { return static_cast<int>(actions.size()); }
};

using DiscreteTrial = Trial<int, int, int>;          // bridge benchmark
using ContinuousTrial = Trial<double, double, double>; // maintenance benchmark
using RailwayTrial = Trial<int, int, double>;        // railway benchmark

} // namespace dbmm
