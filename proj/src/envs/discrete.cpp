#include "dbmm/envs/discrete.hpp"

#include <cmath>

#include "dbmm/core/errors.hpp"
#include "dbmm/core/math.hpp"

namespace dbmm {

void DiscretePOMDPModel::validate() const {
    const int S = n_states();
    const int A = n_actions();
    const int O = n_obs();
    if (S <= 0 || A <= 0 || O <= 0) {
        throw ShapeError("DiscretePOMDPModel: empty model");
    }
    auto check_row = [](const std::vector<double>& row, const char* what) {
        double total = 0.0;
        for (double p : row) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ShapeError(std::string(what) + ": entry outside [0,1]");
            }
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-9) {
            throw ShapeError(std::string(what) + ": row sum " + std::to_string(total));
        }
    };
    for (const auto& P : transition) {
        if (static_cast<int>(P.size()) != S) {
            throw ShapeError("DiscretePOMDPModel: transition matrix row count");
        }
        for (const auto& row : P) {
            if (static_cast<int>(row.size()) != S) {
                throw ShapeError("DiscretePOMDPModel: transition matrix column count");
            }
            check_row(row, "transition");
        }
    }
    for (const auto& row : observation) {
        if (static_cast<int>(row.size()) != O) {
            throw ShapeError("DiscretePOMDPModel: observation matrix column count");
        }
        check_row(row, "observation");
    }
    if (static_cast<int>(initial_belief.size()) != S) {
        throw ShapeError("DiscretePOMDPModel: initial belief length");
    }
    check_row(initial_belief, "initial belief");
}

DiscretePOMDPModel bridge_benchmark_model() {
    DiscretePOMDPModel m;
    // 5 condition states (0 = intact .. 4 = failed), 4 maintenance actions,
    // 3 inspection outcomes.
    m.transition = {
        // action 0: do-nothing
        {{0.80, 0.13, 0.02, 0.00, 0.05},
         {0.00, 0.70, 0.17, 0.05, 0.08},
         {0.00, 0.00, 0.75, 0.15, 0.10},
         {0.00, 0.00, 0.00, 0.60, 0.40},
         {0.00, 0.00, 0.00, 0.00, 1.00}},
        // action 1: minor repair
        {{0.80, 0.13, 0.02, 0.00, 0.05},
         {0.00, 0.80, 0.10, 0.02, 0.08},
         {0.00, 0.00, 0.80, 0.10, 0.10},
         {0.00, 0.00, 0.00, 0.60, 0.40},
         {0.00, 0.00, 0.00, 0.00, 1.00}},
        // action 2: major repair
        {{0.80, 0.13, 0.02, 0.00, 0.05},
         {0.19, 0.65, 0.08, 0.02, 0.06},
         {0.10, 0.20, 0.56, 0.08, 0.06},
         {0.00, 0.10, 0.25, 0.55, 0.10},
         {0.00, 0.00, 0.00, 0.00, 1.00}},
        // action 3: replace
        {{0.80, 0.13, 0.02, 0.00, 0.05},
         {0.80, 0.13, 0.02, 0.00, 0.05},
         {0.80, 0.13, 0.02, 0.00, 0.05},
         {0.80, 0.13, 0.02, 0.00, 0.05},
         {0.80, 0.13, 0.02, 0.00, 0.05}},
    };
    m.observation = {
        {0.80, 0.20, 0.00},
        {0.20, 0.60, 0.20},
        {0.05, 0.70, 0.25},
        {0.00, 0.30, 0.70},
        {0.00, 0.00, 1.00},
    };
    m.initial_belief = {1.0, 0.0, 0.0, 0.0, 0.0};
    m.validate();
    return m;
}

namespace {

void check_state(const DiscretePOMDPModel& model, int state) {
    if (state < 0 || state >= model.n_states()) {
        throw IndexError("discrete env: state " + std::to_string(state) +
                         " out of range");
    }
}

void check_action(const DiscretePOMDPModel& model, int action) {
    if (action < 0 || action >= model.n_actions()) {
        throw IndexError("discrete env: action " + std::to_string(action) +
                         " out of range");
    }
}

} // namespace

std::pair<int, int> discrete_reset(const DiscretePOMDPModel& model, RngStream& rng) {
    const int state = rng.categorical(model.initial_belief);
    const int obs = rng.categorical(model.observation[static_cast<size_t>(state)]);
    return {state, obs};
}

std::pair<int, int> discrete_step(const DiscretePOMDPModel& model, int state,
                                  int action, RngStream& rng) {
    check_state(model, state);
    check_action(model, action);
    const int next = rng.categorical(
        model.transition[static_cast<size_t>(action)][static_cast<size_t>(state)]);
    const int obs = rng.categorical(model.observation[static_cast<size_t>(next)]);
    return {next, obs};
}

CategoricalBelief exact_belief_propagate(const CategoricalBelief& b, int action,
                                         const DiscretePOMDPModel& model) {
    check_action(model, action);
    const int S = model.n_states();
    if (static_cast<int>(b.size()) != S) {
        throw ShapeError("exact_belief_propagate: belief length mismatch");
    }
    const auto& P = model.transition[static_cast<size_t>(action)];
    CategoricalBelief out(static_cast<size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
        const double w = b[static_cast<size_t>(s)];
        if (w == 0.0) continue;
        for (int s2 = 0; s2 < S; ++s2) {
            out[static_cast<size_t>(s2)] += w * P[static_cast<size_t>(s)][static_cast<size_t>(s2)];
        }
    }
    return out;
}

CategoricalBelief exact_belief_update(const CategoricalBelief& b, int action,
                                      int observation,
                                      const DiscretePOMDPModel& model) {
    if (observation < 0 || observation >= model.n_obs()) {
        throw IndexError("exact_belief_update: observation out of range");
    }
    CategoricalBelief post = exact_belief_propagate(b, action, model);
    for (int s = 0; s < model.n_states(); ++s) {
        post[static_cast<size_t>(s)] *=
            model.observation[static_cast<size_t>(s)][static_cast<size_t>(observation)];
    }
    normalize(post); // throws DegenerateBelief when the obs is impossible
    return post;
}

} // namespace dbmm
