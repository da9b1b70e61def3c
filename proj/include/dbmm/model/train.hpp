#pragma once

#include <vector>

#include "dbmm/model/elbo.hpp"

namespace dbmm {

struct TrainReport {
    double initial_loss = 0.0; // full-set loss before any step
    double final_loss = 0.0;   // full-set loss after the last epoch
    std::vector<double> epoch_losses; // mean minibatch loss per epoch
    // final worse than initial — a warning condition, not an error
    bool no_improvement = false;
};

// One optimization round: cfg.epochs shuffled passes over `trials`, Adam step
// per minibatch, gradients clipped to cfg.clip_norm (global norm across all
// four parameter blocks). Zero epochs leaves the model untouched and just
// measures the loss. Identical model state, trials and rng give bit-identical
// final parameters. The initial/final losses are measured with the same noise
// stream, so their difference isn't MC jitter.
TrainReport train_update(Dbmm& model, const std::vector<DiscreteTrial>& trials,
                         const TrainConfig& cfg, RngStream rng);
TrainReport train_update(Dbmm& model, const std::vector<ContinuousTrial>& trials,
                         const TrainConfig& cfg, RngStream rng);
TrainReport train_update(Dbmm& model, const std::vector<RailwayTrial>& trials,
                         const TrainConfig& cfg, RngStream rng);

// Convenience overloads seeding the stream from cfg.seed.
TrainReport train_update(Dbmm& model, const std::vector<DiscreteTrial>& trials,
                         const TrainConfig& cfg);
TrainReport train_update(Dbmm& model, const std::vector<ContinuousTrial>& trials,
                         const TrainConfig& cfg);
TrainReport train_update(Dbmm& model, const std::vector<RailwayTrial>& trials,
                         const TrainConfig& cfg);

} // namespace dbmm
