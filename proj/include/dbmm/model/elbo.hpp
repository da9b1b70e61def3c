#pragma once

#include <cstdint>
#include <vector>

#include "dbmm/core/rng.hpp"
#include "dbmm/core/types.hpp"
#include "dbmm/model/model.hpp"

namespace dbmm {

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 40;      // optimization passes per train_update call
    int minibatch = 10;   // trials per Adam step
    int mc_samples = 1;   // reparameterized draws per step (gaussian mode)
    double clip_norm = 10.0;
    uint64_t seed = 1;

    void validate() const; // positive entries (epochs may be 0 = no-op update)
};

// Flat gradient buffers matching a model's four parameter blocks.
struct DbmmGradients {
    std::vector<double> omega, psi, kappa, prior;

    explicit DbmmGradients(const Dbmm& model);
    void zero();
    double global_norm() const;
    void scale(double c);
};

struct ElboResult {
    double loss = 0.0; // mean negative VLB per time-step per trial
    DbmmGradients grads;
};

// Negative VLB and its exact gradient over a batch of trials.
//
// Objective per trial (observations o_0..o_T, actions a_0..a_{T-1}):
//   VLB = sum_{t=0..T}  E_{q_t}[ log p_kappa(o_t | s, a_{t-1}) ]
//                     - KL( q_t || b~_t )
// over the same posterior chain the belief readout rolls:
//   q_0 = Q_psi(p0, o_0),  q_t = Q_psi(T_omega(q_{t-1}, a_{t-1}), o_t)
// with p0 the learnable initial prior. The KL's second argument b~_t is the
// chain's own propagated prior (p0 at t = 0, T_omega(q_{t-1}, a_{t-1})
// after), so each term is at most the plug-in predictive log-likelihood
// log sum_s b~_t[s] p_kappa(o_t|s), with equality exactly when psi is the
// Bayes update — at that point the objective equals the sequence
// log-likelihood, so maximizing it drives psi toward the Bayes filter.
//
// The posterior expectation is computed by exact enumeration over states in
// the categorical modes and by config.mc_samples reparameterized draws in
// gaussian mode (the rng is taken by value, so a repeated call reuses
// identical noise — finite-difference checks rely on this).
//
// loss is averaged per time-step within a trial and across the batch.
// set want_grads = false to skip the backward pass (loss only).
ElboResult elbo(const Dbmm& model, const std::vector<DiscreteTrial>& batch,
                const TrainConfig& cfg, RngStream rng, bool want_grads = true);
ElboResult elbo(const Dbmm& model, const std::vector<ContinuousTrial>& batch,
                const TrainConfig& cfg, RngStream rng, bool want_grads = true);
ElboResult elbo(const Dbmm& model, const std::vector<RailwayTrial>& batch,
                const TrainConfig& cfg, RngStream rng, bool want_grads = true);

} // namespace dbmm
