#include "dbmm/model/model.hpp"

#include <cmath>

#include "dbmm/autodiff/checkpoint.hpp"
#include "dbmm/core/errors.hpp"
#include "dbmm/core/math.hpp"

namespace dbmm {

ModeShapes mode_shapes(BeliefMode mode, const DbmmDims& dims) {
    ModeShapes s{};
    switch (mode) {
    case BeliefMode::DiscreteBelief:
        if (dims.n_states <= 0 || dims.n_actions <= 0 || dims.n_obs <= 0) {
            throw ShapeError("Dbmm: discrete mode needs n_states/n_actions/n_obs");
        }
        s.omega_in = dims.n_states + dims.n_actions;
        s.omega_out = dims.n_states;
        s.psi_in = dims.n_states + dims.n_obs;
        s.psi_out = dims.n_states;
        s.kappa_in = dims.n_states; // observation matrix is action-independent
        s.kappa_out = dims.n_obs;
        s.prior_len = dims.n_states;
        break;
    case BeliefMode::Gaussian:
        s.omega_in = 3; // mean, std, action
        s.omega_out = 2;
        s.psi_in = 3; // prior mean, prior std, observation
        s.psi_out = 2;
        s.kappa_in = 1; // sampled state
        s.kappa_out = 2;
        s.prior_len = 2;
        break;
    case BeliefMode::Railway:
        if (dims.n_states <= 0 || dims.n_actions <= 0) {
            throw ShapeError("Dbmm: railway mode needs n_states/n_actions");
        }
        s.omega_in = dims.n_states + dims.n_actions;
        s.omega_out = dims.n_states;
        s.psi_in = dims.n_states + 2; // prior, z_t, z_{t-1}
        s.psi_out = dims.n_states;
        s.kappa_in = dims.n_states + dims.n_actions + 1; // state, action, z_{t-1}
        s.kappa_out = 2;                                 // truncated-normal raw params
        s.prior_len = dims.n_states;
        break;
    }
    return s;
}

namespace {
DenseNet make_net(int in, int hidden, int out) { return DenseNet(in, hidden, out); }
} // namespace

Dbmm::Dbmm(BeliefMode mode, DbmmDims dims)
    : mode_(mode),
      dims_(dims),
      omega_(make_net(mode_shapes(mode, dims).omega_in, dims.hidden,
                      mode_shapes(mode, dims).omega_out)),
      psi_(make_net(mode_shapes(mode, dims).psi_in, dims.hidden,
                    mode_shapes(mode, dims).psi_out)),
      kappa_(make_net(mode_shapes(mode, dims).kappa_in, dims.hidden,
                      mode_shapes(mode, dims).kappa_out)),
      prior_params_(static_cast<size_t>(mode_shapes(mode, dims).prior_len), 0.0) {}

void Dbmm::init_params(RngStream rng) {
    omega_.init_params(rng.split(0));
    psi_.init_params(rng.split(1));
    kappa_.init_params(rng.split(2));
    // prior stays zero: uniform belief / softplus(0) std
}

void Dbmm::require_mode(BeliefMode m, const char* what) const {
    if (mode_ != m) {
        throw ShapeError(std::string(what) + ": operation not defined for this mode");
    }
}

CategoricalBelief Dbmm::initial_prior_categorical() const {
    if (mode_ == BeliefMode::Gaussian) {
        throw ShapeError("initial_prior_categorical: gaussian mode");
    }
    return softmax(prior_params_);
}

GaussianParams Dbmm::initial_prior_gaussian() const {
    require_mode(BeliefMode::Gaussian, "initial_prior_gaussian");
    return gaussian_head(prior_params_.data());
}

CategoricalBelief Dbmm::belief_transition(const CategoricalBelief& b, int action) const {
    if (mode_ == BeliefMode::Gaussian) {
        throw ShapeError("belief_transition: categorical call on gaussian mode");
    }
    if (static_cast<int>(b.size()) != dims_.n_states) {
        throw ShapeError("belief_transition: belief length mismatch");
    }
    if (action < 0 || action >= dims_.n_actions) {
        throw IndexError("belief_transition: action out of range");
    }
    std::vector<double> in(b);
    const std::vector<double> a = one_hot(action, dims_.n_actions);
    in.insert(in.end(), a.begin(), a.end());
    return softmax(omega_.forward(in));
}

CategoricalBelief Dbmm::belief_inference(const CategoricalBelief& prior, int obs) const {
    require_mode(BeliefMode::DiscreteBelief, "belief_inference(discrete)");
    if (static_cast<int>(prior.size()) != dims_.n_states) {
        throw ShapeError("belief_inference: prior length mismatch");
    }
    std::vector<double> in(prior);
    const std::vector<double> o = one_hot(obs, dims_.n_obs);
    in.insert(in.end(), o.begin(), o.end());
    return softmax(psi_.forward(in));
}

CategoricalBelief Dbmm::belief_inference(const CategoricalBelief& prior, double obs,
                                         double prev_obs) const {
    require_mode(BeliefMode::Railway, "belief_inference(railway)");
    if (static_cast<int>(prior.size()) != dims_.n_states) {
        throw ShapeError("belief_inference: prior length mismatch");
    }
    std::vector<double> in(prior);
    in.push_back(obs);
    in.push_back(prev_obs);
    return softmax(psi_.forward(in));
}

GaussianParams Dbmm::belief_transition(const GaussianParams& b, double action) const {
    require_mode(BeliefMode::Gaussian, "belief_transition(gaussian)");
    const std::vector<double> in = {b.mean, b.std, action};
    const std::vector<double> raw = omega_.forward(in);
    return gaussian_head(raw.data());
}

GaussianParams Dbmm::belief_inference(const GaussianParams& prior, double obs) const {
    require_mode(BeliefMode::Gaussian, "belief_inference(gaussian)");
    const std::vector<double> in = {prior.mean, prior.std, obs};
    const std::vector<double> raw = psi_.forward(in);
    return gaussian_head(raw.data());
}

double Dbmm::observation_log_likelihood(int state, int obs) const {
    require_mode(BeliefMode::DiscreteBelief, "observation_log_likelihood(discrete)");
    if (obs < 0 || obs >= dims_.n_obs) {
        throw IndexError("observation_log_likelihood: obs out of range");
    }
    const std::vector<double> lp =
        log_softmax(kappa_.forward(one_hot(state, dims_.n_states)));
    return lp[static_cast<size_t>(obs)];
}

double Dbmm::observation_log_likelihood(int state, int action, double obs,
                                        double prev_obs) const {
    require_mode(BeliefMode::Railway, "observation_log_likelihood(railway)");
    std::vector<double> in = one_hot(state, dims_.n_states);
    const std::vector<double> a = one_hot(action, dims_.n_actions);
    in.insert(in.end(), a.begin(), a.end());
    in.push_back(prev_obs);
    const std::vector<double> raw = kappa_.forward(in);
    const GaussianParams g = gaussian_head(raw.data());
    return truncated_normal_log_pdf(obs, g.mean, g.std, 0.0);
}

double Dbmm::observation_log_likelihood(double state_sample, double obs) const {
    require_mode(BeliefMode::Gaussian, "observation_log_likelihood(gaussian)");
    const std::vector<double> raw = kappa_.forward(std::vector<double>{state_sample});
    const GaussianParams g = gaussian_head(raw.data());
    return gaussian_log_pdf(obs, g.mean, g.std);
}

std::vector<CategoricalBelief> Dbmm::infer_trial_beliefs(const DiscreteTrial& trial) const {
    require_mode(BeliefMode::DiscreteBelief, "infer_trial_beliefs(discrete)");
    const int T = trial.horizon();
    if (static_cast<int>(trial.observations.size()) != T + 1) {
        throw ShapeError("infer_trial_beliefs: need T+1 observations for T actions");
    }
    std::vector<CategoricalBelief> beliefs;
    beliefs.reserve(static_cast<size_t>(T) + 1);
    beliefs.push_back(belief_inference(initial_prior_categorical(), trial.observations[0]));
    for (int t = 1; t <= T; ++t) {
        const CategoricalBelief prior =
            belief_transition(beliefs.back(), trial.actions[static_cast<size_t>(t - 1)]);
        beliefs.push_back(
            belief_inference(prior, trial.observations[static_cast<size_t>(t)]));
    }
    return beliefs;
}

std::vector<GaussianParams> Dbmm::infer_trial_beliefs(const ContinuousTrial& trial) const {
    require_mode(BeliefMode::Gaussian, "infer_trial_beliefs(gaussian)");
    const int T = trial.horizon();
    if (static_cast<int>(trial.observations.size()) != T + 1) {
        throw ShapeError("infer_trial_beliefs: need T+1 observations for T actions");
    }
    std::vector<GaussianParams> beliefs;
    beliefs.reserve(static_cast<size_t>(T) + 1);
    beliefs.push_back(belief_inference(initial_prior_gaussian(), trial.observations[0]));
    for (int t = 1; t <= T; ++t) {
        const GaussianParams prior =
            belief_transition(beliefs.back(), trial.actions[static_cast<size_t>(t - 1)]);
        beliefs.push_back(
            belief_inference(prior, trial.observations[static_cast<size_t>(t)]));
    }
    return beliefs;
}

std::vector<CategoricalBelief> Dbmm::infer_trial_beliefs(const RailwayTrial& trial) const {
    require_mode(BeliefMode::Railway, "infer_trial_beliefs(railway)");
    const int T = trial.horizon();
    if (static_cast<int>(trial.observations.size()) != T + 1) {
        throw ShapeError("infer_trial_beliefs: need T+1 observations for T actions");
    }
    std::vector<CategoricalBelief> beliefs;
    beliefs.reserve(static_cast<size_t>(T) + 1);
    // No observation precedes o_0; the autoregressive input is zeroed.
    beliefs.push_back(
        belief_inference(initial_prior_categorical(), trial.observations[0], 0.0));
    for (int t = 1; t <= T; ++t) {
        const CategoricalBelief prior =
            belief_transition(beliefs.back(), trial.actions[static_cast<size_t>(t - 1)]);
        beliefs.push_back(belief_inference(prior,
                                           trial.observations[static_cast<size_t>(t)],
                                           trial.observations[static_cast<size_t>(t - 1)]));
    }
    return beliefs;
}

DiscreteTrial Dbmm::generate(const std::function<int(RngStream&)>& policy, int T,
                             RngStream rng) const {
    require_mode(BeliefMode::DiscreteBelief, "generate(discrete)");
    DiscreteTrial trial;
    trial.seed = rng.stream_id();
    CategoricalBelief prior = initial_prior_categorical();
    int s = rng.categorical(prior);
    std::vector<double> lp = log_softmax(kappa_.forward(one_hot(s, dims_.n_states)));
    std::vector<double> probs(lp.size());
    for (size_t i = 0; i < lp.size(); ++i) probs[i] = std::exp(lp[i]);
    trial.observations.push_back(rng.categorical(probs));
    for (int t = 1; t <= T; ++t) {
        const int a = policy(rng);
        prior = belief_transition(prior, a);
        s = rng.categorical(prior);
        lp = log_softmax(kappa_.forward(one_hot(s, dims_.n_states)));
        for (size_t i = 0; i < lp.size(); ++i) probs[i] = std::exp(lp[i]);
        trial.actions.push_back(a);
        trial.observations.push_back(rng.categorical(probs));
    }
    return trial;
}

ContinuousTrial Dbmm::generate_continuous(const std::function<double(RngStream&)>& policy,
                                          int T, RngStream rng) const {
    require_mode(BeliefMode::Gaussian, "generate_continuous");
    ContinuousTrial trial;
    trial.seed = rng.stream_id();
    GaussianParams prior = initial_prior_gaussian();
    auto observe = [&](double state) {
        const std::vector<double> raw = kappa_.forward(std::vector<double>{state});
        const GaussianParams g = gaussian_head(raw.data());
        return rng.normal(g.mean, g.std);
    };
    double s = rng.normal(prior.mean, prior.std);
    trial.observations.push_back(observe(s));
    for (int t = 1; t <= T; ++t) {
        const double a = policy(rng);
        prior = belief_transition(prior, a);
        s = rng.normal(prior.mean, prior.std);
        trial.actions.push_back(a);
        trial.observations.push_back(observe(s));
    }
    return trial;
}

RailwayTrial Dbmm::generate_railway(const std::function<int(RngStream&)>& policy, int T,
                                    RngStream rng) const {
    require_mode(BeliefMode::Railway, "generate_railway");
    RailwayTrial trial;
    trial.seed = rng.stream_id();
    CategoricalBelief prior = initial_prior_categorical();
    auto observe = [&](int state, int action_enc_or_neg, double prev_obs) {
        std::vector<double> in = one_hot(state, dims_.n_states);
        // At t = 0 there is no preceding action: zero action encoding.
        std::vector<double> a(static_cast<size_t>(dims_.n_actions), 0.0);
        if (action_enc_or_neg >= 0) a[static_cast<size_t>(action_enc_or_neg)] = 1.0;
        in.insert(in.end(), a.begin(), a.end());
        in.push_back(prev_obs);
        const std::vector<double> raw = kappa_.forward(in);
        const GaussianParams g = gaussian_head(raw.data());
        return truncated_normal_sample(g.mean, g.std, 0.0, rng);
    };
    int s = rng.categorical(prior);
    double z = observe(s, -1, 0.0);
    trial.observations.push_back(z);
    for (int t = 1; t <= T; ++t) {
        const int a = policy(rng);
        prior = belief_transition(prior, a);
        s = rng.categorical(prior);
        const double z_new = observe(s, a, z);
        trial.actions.push_back(a);
        trial.observations.push_back(z_new);
        z = z_new;
    }
    return trial;
}

namespace {

ParamBlock net_block(const std::string& name, const std::string& part,
                     const DenseNet& net) {
    ParamBlock b;
    b.name = name + "." + part;
    const auto& p = net.params();
    size_t lo = 0, hi = 0;
    if (part == "W1") {
        lo = net.off_w1();
        hi = net.off_b1();
        b.dims = {net.hidden_dim(), net.in_dim()};
    } else if (part == "b1") {
        lo = net.off_b1();
        hi = net.off_w2();
        b.dims = {net.hidden_dim()};
    } else if (part == "W2") {
        lo = net.off_w2();
        hi = net.off_b2();
        b.dims = {net.out_dim(), net.hidden_dim()};
    } else {
        lo = net.off_b2();
        hi = p.size();
        b.dims = {net.out_dim()};
    }
    b.data.assign(p.begin() + static_cast<std::ptrdiff_t>(lo),
                  p.begin() + static_cast<std::ptrdiff_t>(hi));
    return b;
}

void load_net(const std::vector<ParamBlock>& blocks, const std::string& name,
              DenseNet& net) {
    auto find = [&](const std::string& part) -> const ParamBlock& {
        for (const auto& b : blocks) {
            if (b.name == name + "." + part) return b;
        }
        throw Error("checkpoint: missing block " + name + "." + part);
    };
    auto& p = net.mutable_params();
    auto place = [&](const ParamBlock& b, size_t lo, size_t hi) {
        if (b.data.size() != hi - lo) {
            throw Error("checkpoint: block " + b.name + " has wrong length");
        }
        std::copy(b.data.begin(), b.data.end(), p.begin() + static_cast<std::ptrdiff_t>(lo));
    };
    place(find("W1"), net.off_w1(), net.off_b1());
    place(find("b1"), net.off_b1(), net.off_w2());
    place(find("W2"), net.off_w2(), net.off_b2());
    place(find("b2"), net.off_b2(), p.size());
}

uint32_t fold_dims_hash(BeliefMode mode, const DbmmDims& d) {
    uint32_t h = 2166136261u;
    auto mix = [&h](uint32_t v) {
        h ^= v;
        h *= 16777619u;
    };
    mix(static_cast<uint32_t>(mode));
    mix(static_cast<uint32_t>(d.n_states));
    mix(static_cast<uint32_t>(d.n_actions));
    mix(static_cast<uint32_t>(d.n_obs));
    mix(static_cast<uint32_t>(d.hidden));
    return h;
}

} // namespace

void Dbmm::save(const std::string& path) const {
    std::vector<ParamBlock> blocks;
    ParamBlock meta;
    meta.name = "meta";
    meta.dims = {5};
    meta.data = {static_cast<double>(dims_.n_states), static_cast<double>(dims_.n_actions),
                 static_cast<double>(dims_.n_obs), static_cast<double>(dims_.hidden),
                 static_cast<double>(fold_dims_hash(mode_, dims_))};
    blocks.push_back(meta);
    for (const char* part : {"W1", "b1", "W2", "b2"}) {
        blocks.push_back(net_block("omega", part, omega_));
    }
    for (const char* part : {"W1", "b1", "W2", "b2"}) {
        blocks.push_back(net_block("psi", part, psi_));
    }
    for (const char* part : {"W1", "b1", "W2", "b2"}) {
        blocks.push_back(net_block("kappa", part, kappa_));
    }
    ParamBlock prior;
    prior.name = "prior";
    prior.dims = {static_cast<int32_t>(prior_params_.size())};
    prior.data = prior_params_;
    blocks.push_back(prior);
    save_param_blocks(path, static_cast<uint32_t>(mode_), blocks);
}

Dbmm Dbmm::load(const std::string& path) {
    const LoadedCheckpoint ck = load_param_blocks(path);
    if (ck.model_tag > 2) throw Error("checkpoint: unknown model mode tag");
    const auto mode = static_cast<BeliefMode>(ck.model_tag);
    const ParamBlock* meta = nullptr;
    for (const auto& b : ck.blocks) {
        if (b.name == "meta") meta = &b;
    }
    if (meta == nullptr || meta->data.size() != 5) {
        throw Error("checkpoint: missing or malformed meta block");
    }
    DbmmDims dims;
    dims.n_states = static_cast<int>(meta->data[0]);
    dims.n_actions = static_cast<int>(meta->data[1]);
    dims.n_obs = static_cast<int>(meta->data[2]);
    dims.hidden = static_cast<int>(meta->data[3]);
    if (meta->data[4] != static_cast<double>(fold_dims_hash(mode, dims))) {
        throw Error("checkpoint: config hash mismatch");
    }
    Dbmm model(mode, dims);
    load_net(ck.blocks, "omega", model.omega_);
    load_net(ck.blocks, "psi", model.psi_);
    load_net(ck.blocks, "kappa", model.kappa_);
    const ParamBlock* prior = nullptr;
    for (const auto& b : ck.blocks) {
        if (b.name == "prior") prior = &b;
    }
    if (prior == nullptr || prior->data.size() != model.prior_params_.size()) {
        throw Error("checkpoint: missing or malformed prior block");
    }
    model.prior_params_ = prior->data;
    return model;
}

} // namespace dbmm
