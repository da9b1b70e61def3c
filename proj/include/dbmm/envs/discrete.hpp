#pragma once

#include <utility>
#include <vector>

#include "dbmm/core/rng.hpp"
#include "dbmm/core/types.hpp"

namespace dbmm {

// Tabular POMDP: |A| row-stochastic transition matrices (row = current
// state, column = next state), one row-stochastic observation matrix
// (row = state), and the initial state distribution. All indices 0-based.
struct DiscretePOMDPModel {
    std::vector<std::vector<std::vector<double>>> transition; // [A][S][S]
    std::vector<std::vector<double>> observation;             // [S][O]
    CategoricalBelief initial_belief;

    int n_states() const { return static_cast<int>(observation.size()); }
    int n_actions() const { return static_cast<int>(transition.size()); }
    int n_obs() const {
        return observation.empty() ? 0 : static_cast<int>(observation[0].size());
    }

    // Row sums within 1e-9 of 1, entries in [0,1], consistent shapes.
    void validate() const;
};

// The 5-state / 4-action / 3-observation bridge maintenance POMDP.
// Action order: 0 do-nothing, 1 minor repair, 2 major repair, 3 replace.
// Default initial belief: point mass on the intact state 0.
DiscretePOMDPModel bridge_benchmark_model();

// (state, observation) sampled from the initial distribution + obs row.
std::pair<int, int> discrete_reset(const DiscretePOMDPModel& model, RngStream& rng);

// One environment transition; observation attaches to the new state.
std::pair<int, int> discrete_step(const DiscretePOMDPModel& model, int state,
                                  int action, RngStream& rng);

// Prior propagation b' = b^T P_a.
CategoricalBelief exact_belief_propagate(const CategoricalBelief& b, int action,
                                         const DiscretePOMDPModel& model);

// Full Bayes update: propagate by `action`, reweight by the observation
// likelihood column, renormalize. Throws DegenerateBelief when the
// observation has zero probability under the propagated prior.
CategoricalBelief exact_belief_update(const CategoricalBelief& b, int action,
                                      int observation,
                                      const DiscretePOMDPModel& model);

} // namespace dbmm
