#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dbmm/autodiff/dense_net.hpp"
#include "dbmm/autodiff/heads.hpp"
#include "dbmm/core/rng.hpp"
#include "dbmm/core/types.hpp"

namespace dbmm {

// Which belief family the model works in, fixing network shapes and heads.
enum class BeliefMode {
    DiscreteBelief, // categorical beliefs, discrete observations
    Gaussian,       // (mean, std) beliefs, scalar observations/actions
    Railway,        // categorical beliefs, autoregressive scalar obs <= 0
};

struct DbmmDims {
    int n_states = 0;  // categorical modes; ignored in gaussian mode
    int n_actions = 0; // categorical modes; ignored in gaussian mode
    int n_obs = 0;     // discrete mode only
    int hidden = 100;
};

// The Deep Belief Markov Model: three single-hidden-layer networks plus a
// learnable initial prior.
//   omega — belief transition T: (belief, action) -> next prior belief.
//           One parameter set: the same application feeds psi and serves as
//           the KL prior of the training objective.
//   psi   — belief inference Q: (prior belief, observation [, previous
//           observation in railway mode]) -> posterior belief.
//   kappa — observation model: state encoding [, action, previous
//           observation] -> observation distribution parameters.
// The initial prior is a raw parameter vector: logits over states in the
// categorical modes, (raw mean, raw pre-softplus std) in gaussian mode.
class Dbmm {
public:
    Dbmm(BeliefMode mode, DbmmDims dims);

    BeliefMode mode() const { return mode_; }
    const DbmmDims& dims() const { return dims_; }

    // Xavier init for the nets; the prior parameters stay at zero (uniform
    // categorical / standard-ish gaussian), so an untrained model starts
    // from maximally uncertain beliefs.
    void init_params(RngStream rng);

    DenseNet& omega() { return omega_; }
    DenseNet& psi() { return psi_; }
    DenseNet& kappa() { return kappa_; }
    const DenseNet& omega() const { return omega_; }
    const DenseNet& psi() const { return psi_; }
    const DenseNet& kappa() const { return kappa_; }

    const std::vector<double>& prior_params() const { return prior_params_; }
    std::vector<double>& mutable_prior_params() { return prior_params_; }

    CategoricalBelief initial_prior_categorical() const;
    GaussianParams initial_prior_gaussian() const;

    // ---- belief operators (categorical modes) ----
    CategoricalBelief belief_transition(const CategoricalBelief& b, int action) const;
    // discrete mode: observation symbol index
    CategoricalBelief belief_inference(const CategoricalBelief& prior, int obs) const;
    // railway mode: scalar observation + previous observation
    CategoricalBelief belief_inference(const CategoricalBelief& prior, double obs,
                                       double prev_obs) const;

    // ---- belief operators (gaussian mode) ----
    GaussianParams belief_transition(const GaussianParams& b, double action) const;
    GaussianParams belief_inference(const GaussianParams& prior, double obs) const;

    // ---- observation model ----
    // discrete mode (action-independent observation matrix):
    double observation_log_likelihood(int state, int obs) const;
    // railway mode: truncated-normal density of obs at ub = 0
    double observation_log_likelihood(int state, int action, double obs,
                                      double prev_obs) const;
    // gaussian mode:
    double observation_log_likelihood(double state_sample, double obs) const;

    // ---- inference over whole trials (deterministic, no sampling) ----
    // Returns beliefs b_0..b_T where b_0 = Q(initial prior, o_0) and
    // b_t = Q(T(b_{t-1}, a_{t-1}), o_t).
    std::vector<CategoricalBelief> infer_trial_beliefs(const DiscreteTrial& trial) const;
    std::vector<GaussianParams> infer_trial_beliefs(const ContinuousTrial& trial) const;
    std::vector<CategoricalBelief> infer_trial_beliefs(const RailwayTrial& trial) const;

    // ---- generative rollout (model as simulator; no true states) ----
    DiscreteTrial generate(const std::function<int(RngStream&)>& policy, int T,
                           RngStream rng) const;
    ContinuousTrial generate_continuous(const std::function<double(RngStream&)>& policy,
                                        int T, RngStream rng) const;
    RailwayTrial generate_railway(const std::function<int(RngStream&)>& policy, int T,
                                  RngStream rng) const;

    // ---- persistence (autodiff checkpoint format + metadata) ----
    void save(const std::string& path) const;
    static Dbmm load(const std::string& path);

private:
    BeliefMode mode_;
    DbmmDims dims_;
    DenseNet omega_;
    DenseNet psi_;
    DenseNet kappa_;
    std::vector<double> prior_params_;

    void require_mode(BeliefMode m, const char* what) const;
};

// Network shapes per mode (used by the ELBO as well).
struct ModeShapes {
    int omega_in, omega_out;
    int psi_in, psi_out;
    int kappa_in, kappa_out;
    int prior_len;
};
ModeShapes mode_shapes(BeliefMode mode, const DbmmDims& dims);

} // namespace dbmm
