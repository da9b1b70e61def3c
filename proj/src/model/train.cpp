#include "dbmm/model/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dbmm/autodiff/adam.hpp"
#include "dbmm/core/errors.hpp"

namespace dbmm {

namespace {

template <class TrialT>
TrainReport train_impl(Dbmm& model, const std::vector<TrialT>& trials,
                       const TrainConfig& cfg, RngStream rng) {
    cfg.validate();
    if (trials.empty()) throw EmptyInput("train_update: no trials");

    AdamConfig acfg;
    acfg.lr = cfg.learning_rate;
    Adam opt_omega(model.omega().param_count(), acfg);
    Adam opt_psi(model.psi().param_count(), acfg);
    Adam opt_kappa(model.kappa().param_count(), acfg);
    Adam opt_prior(model.prior_params().size(), acfg);

    TrainReport rep;
    // stream 0 is reserved for the two bookend measurements so they share
    // their MC noise; epoch streams start at 1
    rep.initial_loss = elbo(model, trials, cfg, rng.split(0), false).loss;

    const size_t n = trials.size();
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), size_t{0});
    std::vector<TrialT> batch;

    for (int e = 1; e <= cfg.epochs; ++e) {
        RngStream erng = rng.split(static_cast<uint64_t>(e));
        for (size_t i = n - 1; i > 0; --i) {
            size_t j = erng.uniform_int(i + 1);
            std::swap(perm[i], perm[j]);
        }
        double esum = 0.0;
        int nbatches = 0;
        for (size_t start = 0; start < n; start += size_t(cfg.minibatch)) {
            const size_t end = std::min(n, start + size_t(cfg.minibatch));
            batch.clear();
            for (size_t i = start; i < end; ++i) batch.push_back(trials[perm[i]]);

            ElboResult r = elbo(model, batch, cfg, erng.split(1 + start), true);
            const double norm = r.grads.global_norm();
            if (!std::isfinite(norm))
                throw NonFiniteGradient(
                    "train_update: non-finite gradient norm at epoch " +
                    std::to_string(e));
            if (norm > cfg.clip_norm) r.grads.scale(cfg.clip_norm / norm);

            opt_omega.step(model.omega().mutable_params(), r.grads.omega);
            opt_psi.step(model.psi().mutable_params(), r.grads.psi);
            opt_kappa.step(model.kappa().mutable_params(), r.grads.kappa);
            opt_prior.step(model.mutable_prior_params(), r.grads.prior);

            esum += r.loss;
            ++nbatches;
        }
        rep.epoch_losses.push_back(esum / nbatches);
    }

    rep.final_loss = elbo(model, trials, cfg, rng.split(0), false).loss;
    rep.no_improvement = rep.final_loss > rep.initial_loss;
    return rep;
}

} // namespace

TrainReport train_update(Dbmm& model, const std::vector<DiscreteTrial>& trials,
                         const TrainConfig& cfg, RngStream rng) {
    return train_impl(model, trials, cfg, rng);
}
TrainReport train_update(Dbmm& model, const std::vector<ContinuousTrial>& trials,
                         const TrainConfig& cfg, RngStream rng) {
    return train_impl(model, trials, cfg, rng);
}
TrainReport train_update(Dbmm& model, const std::vector<RailwayTrial>& trials,
                         const TrainConfig& cfg, RngStream rng) {
    return train_impl(model, trials, cfg, rng);
}

TrainReport train_update(Dbmm& model, const std::vector<DiscreteTrial>& trials,
                         const TrainConfig& cfg) {
    return train_impl(model, trials, cfg, RngStream(cfg.seed));
}
TrainReport train_update(Dbmm& model, const std::vector<ContinuousTrial>& trials,
                         const TrainConfig& cfg) {
    return train_impl(model, trials, cfg, RngStream(cfg.seed));
}
TrainReport train_update(Dbmm& model, const std::vector<RailwayTrial>& trials,
                         const TrainConfig& cfg) {
    return train_impl(model, trials, cfg, RngStream(cfg.seed));
}

} // namespace dbmm
