#include "dbmm/harness/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "dbmm/core/errors.hpp"
#include "dbmm/core/math.hpp"
#include "dbmm/enkf/enkf.hpp"
#include "dbmm/model/model.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace dbmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---- config ----------------------------------------------------------------

template <class T>
void read_field(const ordered_json& j, const char* key, T& target,
                const std::string& where) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where, e.what());
    }
}

} // namespace

void RunConfig::validate() const {
    if (benchmark != "discrete" && benchmark != "continuous" &&
        benchmark != "railway")
        throw ConfigError("config.benchmark",
                          "must be one of discrete|continuous|railway, got '" +
                              benchmark + "'");
    if (evaluations <= 0) throw ConfigError("config.evaluations", "must be positive");
    if (trials <= 0) throw ConfigError("config.trials", "must be positive");
    if (horizon <= 0) throw ConfigError("config.horizon", "must be positive");
    if (policy != "random")
        throw ConfigError("config.policy", "only 'random' is supported");
    if (out_dir.empty()) throw ConfigError("config.out_dir", "must be non-empty");
    if (enkf_particles < 2)
        throw ConfigError("config.enkf.particles", "need at least 2 particles");
    if (!(initial_state_std >= 0.0) || !std::isfinite(initial_state_mean))
        throw ConfigError("config.initial_state",
                          "mean must be finite, std non-negative");
    if (!initial_belief.empty()) {
        double total = 0.0;
        for (double p : initial_belief) {
            if (!(p >= 0.0))
                throw ConfigError("config.initial_belief",
                                  "entries must be non-negative");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-6)
            throw ConfigError("config.initial_belief", "must sum to 1");
    }
    train.validate();
}

RunConfig default_run_config(const std::string& benchmark) {
    RunConfig cfg;
    cfg.benchmark = benchmark;
    if (benchmark == "railway") cfg.horizon = 50;
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config", std::string("parse failure in '") + path +
                                        "': " + e.what());
    }

    std::string benchmark = "discrete";
    read_field(j, "benchmark", benchmark, "config.benchmark");
    RunConfig cfg = default_run_config(benchmark);

    read_field(j, "evaluations", cfg.evaluations, "config.evaluations");
    read_field(j, "trials", cfg.trials, "config.trials");
    read_field(j, "horizon", cfg.horizon, "config.horizon");
    read_field(j, "policy", cfg.policy, "config.policy");
    read_field(j, "out_dir", cfg.out_dir, "config.out_dir");
    read_field(j, "seed", cfg.seed, "config.seed");
    read_field(j, "initial_belief", cfg.initial_belief, "config.initial_belief");
    read_field(j, "railway_config", cfg.railway_config_path, "config.railway_config");

    if (j.contains("initial_state")) {
        const auto& s = j.at("initial_state");
        read_field(s, "mean", cfg.initial_state_mean, "config.initial_state.mean");
        read_field(s, "std", cfg.initial_state_std, "config.initial_state.std");
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        read_field(t, "learning_rate", cfg.train.learning_rate,
                   "config.train.learning_rate");
        read_field(t, "epochs", cfg.train.epochs, "config.train.epochs");
        read_field(t, "minibatch", cfg.train.minibatch, "config.train.minibatch");
        read_field(t, "mc_samples", cfg.train.mc_samples, "config.train.mc_samples");
        read_field(t, "clip_norm", cfg.train.clip_norm, "config.train.clip_norm");
        read_field(t, "seed", cfg.train.seed, "config.train.seed");
    }
    if (j.contains("enkf")) {
        read_field(j.at("enkf"), "particles", cfg.enkf_particles,
                   "config.enkf.particles");
    }
    cfg.validate();
    return cfg;
}

// ---- policies & trial simulation -------------------------------------------

int random_policy_discrete(int n_actions, RngStream& rng) {
    return int(rng.uniform_int(uint64_t(n_actions)));
}

double random_policy_continuous(RngStream& rng) { return rng.uniform01(); }

uint64_t trial_stream_id(int evaluation, int trial) {
    return (uint64_t(evaluation) + 1) << 32 | uint64_t(uint32_t(trial));
}

DiscreteTrial simulate_discrete_trial(const DiscretePOMDPModel& model,
                                      const std::vector<double>& initial_belief,
                                      int horizon, RngStream trial_rng) {
    RngStream env_rng = trial_rng.split(0);
    RngStream pol_rng = trial_rng.split(1);
    DiscreteTrial tr;
    tr.seed = trial_rng.stream_id();
    int s = int(env_rng.categorical(initial_belief));
    int o = int(env_rng.categorical(model.observation[s]));
    tr.states.push_back(s);
    tr.observations.push_back(o);
    for (int t = 1; t <= horizon; ++t) {
        const int a = random_policy_discrete(model.n_actions(), pol_rng);
        auto [s2, o2] = discrete_step(model, s, a, env_rng);
        s = s2;
        tr.actions.push_back(a);
        tr.states.push_back(s);
        tr.observations.push_back(o2);
    }
    return tr;
}

ContinuousTrial simulate_continuous_trial(const ContinuousMaintenanceModel& model,
                                          double initial_mean, double initial_std,
                                          int horizon, RngStream trial_rng) {
    RngStream env_rng = trial_rng.split(0);
    RngStream pol_rng = trial_rng.split(1);
    ContinuousTrial tr;
    tr.seed = trial_rng.stream_id();
    double s = initial_std > 0.0 ? env_rng.normal(initial_mean, initial_std)
                                 : initial_mean;
    tr.states.push_back(s);
    tr.observations.push_back(cont_observe(s, model, env_rng));
    for (int t = 1; t <= horizon; ++t) {
        const double a = random_policy_continuous(pol_rng);
        auto [s2, o2] = cont_step(s, a, model, env_rng);
        s = s2;
        tr.actions.push_back(a);
        tr.states.push_back(s);
        tr.observations.push_back(o2);
    }
    return tr;
}

RailwayTrial simulate_railway_trial(const RailwayModelConfig& config,
                                    const std::vector<double>& initial_belief,
                                    int horizon, RngStream trial_rng) {
    RngStream env_rng = trial_rng.split(0);
    RngStream pol_rng = trial_rng.split(1);
    RailwayTrial tr;
    tr.seed = trial_rng.stream_id();
    int s = int(env_rng.categorical(initial_belief));
    auto [s0, z0] = railway_step(s, 0.0, 0, 0, config, env_rng);
    double z = z0;
    tr.states.push_back(s0);
    tr.observations.push_back(z);
    for (int t = 1; t <= horizon; ++t) {
        const int a = random_policy_discrete(config.n_actions(), pol_rng);
        auto [s2, z2] = railway_step(s, z, t, a, config, env_rng);
        s = s2;
        z = z2;
        tr.actions.push_back(a);
        tr.states.push_back(s);
        tr.observations.push_back(z);
    }
    return tr;
}

// ---- exact filters over logged trials ---------------------------------------

std::vector<CategoricalBelief> exact_trial_beliefs(const DiscretePOMDPModel& model,
                                                   const std::vector<double>& initial_belief,
                                                   const DiscreteTrial& trial) {
    std::vector<CategoricalBelief> out;
    out.reserve(trial.observations.size());
    // step 0: reweight the initial belief by the first observation (no action)
    CategoricalBelief b = initial_belief;
    for (int s = 0; s < model.n_states(); ++s)
        b[s] *= model.observation[s][trial.observations[0]];
    normalize(b);
    out.push_back(b);
    for (size_t t = 1; t < trial.observations.size(); ++t) {
        b = exact_belief_update(b, trial.actions[t - 1], trial.observations[t], model);
        out.push_back(b);
    }
    return out;
}

std::vector<CategoricalBelief> exact_trial_beliefs(const RailwayModelConfig& config,
                                                   const std::vector<double>& initial_belief,
                                                   const RailwayTrial& trial) {
    std::vector<CategoricalBelief> out;
    out.reserve(trial.observations.size());
    CategoricalBelief b = railway_exact_belief_update(
        initial_belief, 0, trial.observations[0], 0.0, 0, config);
    out.push_back(b);
    for (size_t t = 1; t < trial.observations.size(); ++t) {
        b = railway_exact_belief_update(b, trial.actions[t - 1],
                                        trial.observations[t],
                                        trial.observations[t - 1], int(t), config);
        out.push_back(b);
    }
    return out;
}

// ---- persistence helpers -----------------------------------------------------

namespace {

[[noreturn]] void abort_run(const std::string& what) {
    throw RunAborted("run aborted: " + what);
}

template <class TrialT>
void append_trial_line(std::ofstream& out, int index, const TrialT& tr) {
    ordered_json line;
    line["trial"] = index;
    line["seed"] = tr.seed;
    line["states"] = tr.states;
    line["observations"] = tr.observations;
    line["actions"] = tr.actions;
    out << line.dump() << '\n';
}

void put_if_finite(ordered_json& j, const char* key, double v) {
    if (std::isfinite(v)) j[key] = v;
}

ordered_json mca_to_json(const McaResult& m) {
    ordered_json j;
    j["accuracy"] = m.accuracy; // NaN entries serialize as null
    j["count"] = m.count;
    return j;
}

McaResult mca_from_json(const ordered_json& j) {
    McaResult m;
    for (const auto& v : j.at("accuracy"))
        m.accuracy.push_back(v.is_number() ? v.get<double>() : kNaN);
    for (const auto& v : j.at("count")) m.count.push_back(v.get<int64_t>());
    return m;
}

ordered_json record_to_json(const EvaluationRecord& r) {
    ordered_json j;
    j["evaluation"] = r.evaluation;
    j["failed"] = r.failed;
    put_if_finite(j, "ce_true", r.ce_true);
    put_if_finite(j, "ce_pred", r.ce_pred);
    put_if_finite(j, "kl_true", r.kl_true);
    put_if_finite(j, "kl_pred", r.kl_pred);
    put_if_finite(j, "mse_obs", r.mse_obs);
    put_if_finite(j, "mse_pred", r.mse_pred);
    put_if_finite(j, "mse_enkf", r.mse_enkf);
    put_if_finite(j, "ks_pred", r.ks_pred);
    put_if_finite(j, "train_initial_loss", r.train_initial_loss);
    put_if_finite(j, "train_final_loss", r.train_final_loss);
    if (!r.mca_true.accuracy.empty()) j["mca_true"] = mca_to_json(r.mca_true);
    if (!r.mca_pred.accuracy.empty()) j["mca_pred"] = mca_to_json(r.mca_pred);
    if (r.has_reliability) j["reliability_cdf"] = r.reliability.cdf;
    if (!r.checkpoint_path.empty()) j["checkpoint"] = r.checkpoint_path;
    return j;
}

double num_or_nan(const ordered_json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) return kNaN;
    return j.at(key).get<double>();
}

EvaluationRecord record_from_json(const ordered_json& j) {
    EvaluationRecord r;
    r.evaluation = j.value("evaluation", 0);
    r.failed = j.value("failed", false);
    r.ce_true = num_or_nan(j, "ce_true");
    r.ce_pred = num_or_nan(j, "ce_pred");
    r.kl_true = num_or_nan(j, "kl_true");
    r.kl_pred = num_or_nan(j, "kl_pred");
    r.mse_obs = num_or_nan(j, "mse_obs");
    r.mse_pred = num_or_nan(j, "mse_pred");
    r.mse_enkf = num_or_nan(j, "mse_enkf");
    r.ks_pred = num_or_nan(j, "ks_pred");
    r.train_initial_loss = num_or_nan(j, "train_initial_loss");
    r.train_final_loss = num_or_nan(j, "train_final_loss");
    if (j.contains("mca_true")) r.mca_true = mca_from_json(j.at("mca_true"));
    if (j.contains("mca_pred")) r.mca_pred = mca_from_json(j.at("mca_pred"));
    if (j.contains("reliability_cdf")) {
        r.has_reliability = true;
        r.reliability.cdf = j.at("reliability_cdf").get<std::vector<double>>();
        r.reliability.grid.resize(r.reliability.cdf.size());
        for (size_t i = 0; i < r.reliability.grid.size(); ++i)
            r.reliability.grid[i] = double(i) / 100.0;
        r.reliability.ks = r.ks_pred;
    }
    r.checkpoint_path = j.value("checkpoint", std::string());
    return r;
}

void write_records_json(const std::vector<EvaluationRecord>& records,
                        const RunConfig& config, const std::string& out_dir) {
    ordered_json doc;
    ordered_json cj;
    cj["benchmark"] = config.benchmark;
    cj["seed"] = config.seed;
    cj["evaluations"] = config.evaluations;
    cj["trials"] = config.trials;
    cj["horizon"] = config.horizon;
    cj["policy"] = config.policy;
    doc["config"] = cj;
    ordered_json arr = ordered_json::array();
    for (const auto& r : records) arr.push_back(record_to_json(r));
    doc["records"] = arr;
    const std::string path = out_dir + "/records.json";
    std::ofstream out(path);
    out << doc.dump(2) << '\n';
    if (!out.good()) abort_run("cannot write " + path);
}

// One metric evaluation pass of a categorical benchmark; shared between the
// discrete and railway loops.
void categorical_metrics(const std::vector<CategoricalBelief>& pred_flat,
                         const std::vector<CategoricalBelief>& true_flat,
                         const std::vector<int>& state_flat, int n_states,
                         EvaluationRecord& rec) {
    rec.ce_pred = cross_entropy(pred_flat, state_flat);
    rec.ce_true = cross_entropy(true_flat, state_flat);
    rec.kl_pred = kl_to_onehot(pred_flat, state_flat);
    rec.kl_true = kl_to_onehot(true_flat, state_flat);
    rec.mca_pred = mca(pred_flat, state_flat, n_states);
    rec.mca_true = mca(true_flat, state_flat, n_states);
    rec.mse_obs = rec.mse_pred = rec.mse_enkf = kNaN;
    rec.ks_pred = kNaN;
}

struct RunLogger {
    std::ofstream out;
    explicit RunLogger(const std::string& path) : out(path) {
        if (!out) abort_run("cannot open " + path);
    }
    void line(const std::string& s) { out << s << '\n' << std::flush; }
};

std::string fmt_secs(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1fs", s);
    return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Trains the model on this evaluation's trials, recording losses/warnings.
// NonFiniteLoss marks the evaluation failed; the run continues.
template <class TrialT>
void train_phase(Dbmm& model, const std::vector<TrialT>& trials,
                 const RunConfig& config, RngStream train_rng,
                 EvaluationRecord& rec, RunLogger& log) {
    rec.train_initial_loss = rec.train_final_loss = kNaN;
    try {
        TrainReport rep = train_update(model, trials, config.train, train_rng);
        rec.train_initial_loss = rep.initial_loss;
        rec.train_final_loss = rep.final_loss;
        if (rep.no_improvement)
            log.line("evaluation " + std::to_string(rec.evaluation) +
                     ": warning: NoImprovement (loss " +
                     std::to_string(rep.initial_loss) + " -> " +
                     std::to_string(rep.final_loss) + ")");
    } catch (const NonFiniteLoss& e) {
        rec.failed = true;
        log.line("evaluation " + std::to_string(rec.evaluation) +
                 ": failed: " + e.what());
    }
}

void save_checkpoint(const Dbmm& model, const std::string& out_dir, int eval,
                     EvaluationRecord& rec) {
    // stored relative to out_dir so records are byte-identical wherever the
    // run lands
    const std::string name = "checkpoint_eval" + std::to_string(eval) + ".ckpt";
    try {
        model.save(out_dir + "/" + name);
    } catch (const Error& e) {
        abort_run(e.what());
    }
    rec.checkpoint_path = name;
}

void prepare_out_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) abort_run("cannot create output directory " + out_dir + ": " +
                      ec.message());
}

} // namespace

namespace {

void seed_initial_prior(Dbmm& model, const RunConfig& config) {
    auto& p = model.mutable_prior_params();
    if (model.mode() == BeliefMode::Gaussian) {
        // raw layout is (mean, pre-softplus std)
        const double std = std::max(config.initial_state_std, 0.1);
        p[0] = config.initial_state_mean;
        p[1] = std::log(std::expm1(std));
        return;
    }
    const int n = int(p.size());
    std::vector<double> b0 = config.initial_belief;
    if (b0.empty()) {
        if (config.benchmark == "discrete")
            b0 = bridge_benchmark_model().initial_belief;
        else
            b0 = config.railway_config_path.empty()
                     ? default_railway_config().initial_belief
                     : load_railway_config(config.railway_config_path).initial_belief;
    }
    if (int(b0.size()) != n)
        throw ConfigError("config.initial_belief",
                          "needs " + std::to_string(n) + " entries");
    // keep a little mass everywhere so the logits stay in a range SGD can
    // actually move
    for (int s = 0; s < n; ++s)
        p[s] = std::log(0.9 * b0[s] + 0.1 / n);
}

// Weak ordinal tie-breaker on kappa: dedicate hidden channel s to state s
// (unit input weight), then lean that channel's output toward the signal
// level proportional to s. Discrete mode leans the observation logits with
// a triangular agreement profile; railway mode leans the signal mean
// downward with s (worse state, more negative signal).
void seed_ordinal_observation_bias(Dbmm& model) {
    if (model.mode() == BeliefMode::Gaussian) return;
    DenseNet& k = model.kappa();
    const int S = model.dims().n_states;
    const int H = k.hidden_dim();
    const int O = k.out_dim();
    auto& w = k.mutable_params();
    for (int s = 0; s < S && s < H; ++s) {
        w[k.off_w1() + size_t(s) * k.in_dim() + size_t(s)] += 1.0;
        if (model.mode() == BeliefMode::DiscreteBelief) {
            const double pos = S > 1 ? double(s) / (S - 1) : 0.0;
            for (int o = 0; o < O; ++o) {
                const double op = O > 1 ? double(o) / (O - 1) : 0.0;
                w[k.off_w2() + size_t(o) * H + size_t(s)] +=
                    0.5 * (1.0 - 2.0 * std::abs(op - pos));
            }
        } else { // railway: out = (signal mean, pre-softplus std)
            w[k.off_w2() + size_t(s)] +=
                S > 1 ? -1.0 * double(s) / (S - 1) : 0.0;
        }
    }
}

} // namespace

Dbmm init_run_model(const RunConfig& config, RngStream rng) {
    Dbmm model = [&] {
        if (config.benchmark == "discrete") {
            const DiscretePOMDPModel env = bridge_benchmark_model();
            return Dbmm(BeliefMode::DiscreteBelief,
                        DbmmDims{env.n_states(), env.n_actions(), env.n_obs(), 100});
        }
        if (config.benchmark == "continuous")
            return Dbmm(BeliefMode::Gaussian, DbmmDims{1, 1, 1, 100});
        const RailwayModelConfig env =
            config.railway_config_path.empty()
                ? default_railway_config()
                : load_railway_config(config.railway_config_path);
        return Dbmm(BeliefMode::Railway,
                    DbmmDims{env.n_states(), env.n_actions(), 1, 100});
    }();
    model.init_params(rng);
    seed_initial_prior(model, config);
    seed_ordinal_observation_bias(model);
    return model;
}

// ---- the evaluate-then-train loop ---------------------------------------------

namespace {

RunResult run_discrete(const RunConfig& config) {
    const DiscretePOMDPModel env = bridge_benchmark_model();
    const int S = env.n_states();
    std::vector<double> b0 =
        config.initial_belief.empty() ? env.initial_belief : config.initial_belief;
    if (int(b0.size()) != S)
        throw ConfigError("config.initial_belief",
                          "needs " + std::to_string(S) + " entries");

    RngStream root(config.seed);
    Dbmm model = init_run_model(config, root.split(0));

    RunLogger log(config.out_dir + "/run.log");
    RunResult out;
    for (int i = 0; i < config.evaluations; ++i) {
        const auto t0 = Clock::now();
        EvaluationRecord rec;
        rec.evaluation = i;

        const std::string log_path =
            config.out_dir + "/trials_eval" + std::to_string(i) + ".jsonl";
        std::ofstream jsonl(log_path);
        if (!jsonl) abort_run("cannot open " + log_path);

        std::vector<DiscreteTrial> trials;
        trials.reserve(config.trials);
        std::vector<CategoricalBelief> pred_flat, true_flat;
        std::vector<int> state_flat;
        for (int k = 0; k < config.trials; ++k) {
            DiscreteTrial tr = simulate_discrete_trial(
                env, b0, config.horizon, root.split(trial_stream_id(i, k)));
            append_trial_line(jsonl, k, tr);
            const auto pred = model.infer_trial_beliefs(tr);
            const auto truth = exact_trial_beliefs(env, b0, tr);
            for (int t = 1; t <= config.horizon; ++t) {
                pred_flat.push_back(pred[t]);
                true_flat.push_back(truth[t]);
                state_flat.push_back(tr.states[t]);
            }
            trials.push_back(std::move(tr));
        }
        jsonl.flush();
        if (!jsonl.good()) abort_run("cannot write " + log_path);

        categorical_metrics(pred_flat, true_flat, state_flat, S, rec);
        train_phase(model, trials, config, root.split(2000000 + uint64_t(i)), rec,
                    log);
        save_checkpoint(model, config.out_dir, i, rec);
        rec.wall_seconds = seconds_since(t0);
        char line[256];
        std::snprintf(line, sizeof(line),
                      "evaluation %d: ce_true=%.4f ce_pred=%.4f (%s)", i,
                      rec.ce_true, rec.ce_pred, fmt_secs(rec.wall_seconds).c_str());
        log.line(line);
        out.records.push_back(std::move(rec));
    }
    write_records_json(out.records, config, config.out_dir);
    return out;
}

RunResult run_continuous(const RunConfig& config) {
    const ContinuousMaintenanceModel env;
    RngStream root(config.seed);
    Dbmm model = init_run_model(config, root.split(0));

    RunLogger log(config.out_dir + "/run.log");
    RunResult out;
    for (int i = 0; i < config.evaluations; ++i) {
        const auto t0 = Clock::now();
        EvaluationRecord rec;
        rec.evaluation = i;
        rec.ce_true = rec.ce_pred = rec.kl_true = kNaN;

        const std::string log_path =
            config.out_dir + "/trials_eval" + std::to_string(i) + ".jsonl";
        std::ofstream jsonl(log_path);
        if (!jsonl) abort_run("cannot open " + log_path);

        std::vector<ContinuousTrial> trials;
        trials.reserve(config.trials);
        std::vector<GaussianBelief> pred_flat, truth_flat;
        std::vector<double> state_flat, obs_flat, mean_flat;
        for (int k = 0; k < config.trials; ++k) {
            ContinuousTrial tr = simulate_continuous_trial(
                env, config.initial_state_mean, config.initial_state_std,
                config.horizon, root.split(trial_stream_id(i, k)));
            append_trial_line(jsonl, k, tr);
            const auto pred = model.infer_trial_beliefs(tr);
            for (int t = 1; t <= config.horizon; ++t) {
                pred_flat.push_back(GaussianBelief{pred[t].mean, pred[t].std});
                mean_flat.push_back(pred[t].mean);
                state_flat.push_back(tr.states[t]);
                obs_flat.push_back(tr.observations[t]);
                truth_flat.push_back(cont_true_next_distribution(
                    tr.states[t - 1], tr.actions[t - 1], env));
            }
            trials.push_back(std::move(tr));
        }
        jsonl.flush();
        if (!jsonl.good()) abort_run("cannot write " + log_path);

        rec.mse_obs = mse(obs_flat, state_flat);
        rec.mse_pred = mse(mean_flat, state_flat);
        rec.mse_enkf = kNaN;
        rec.kl_pred = kl_gaussian_sequence(pred_flat, truth_flat);
        rec.reliability = reliability_curve(pred_flat, state_flat);
        rec.has_reliability = true;
        rec.ks_pred = rec.reliability.ks;

        train_phase(model, trials, config, root.split(2000000 + uint64_t(i)), rec,
                    log);
        save_checkpoint(model, config.out_dir, i, rec);
        rec.wall_seconds = seconds_since(t0);
        char line[256];
        std::snprintf(line, sizeof(line),
                      "evaluation %d: mse_obs=%.5f mse_pred=%.5f kl=%.4f (%s)", i,
                      rec.mse_obs, rec.mse_pred, rec.kl_pred,
                      fmt_secs(rec.wall_seconds).c_str());
        log.line(line);
        out.records.push_back(std::move(rec));
    }
    write_records_json(out.records, config, config.out_dir);
    return out;
}

RunResult run_railway(const RunConfig& config) {
    const RailwayModelConfig env = config.railway_config_path.empty()
                                       ? default_railway_config()
                                       : load_railway_config(config.railway_config_path);
    env.validate();
    const int S = env.n_states();
    std::vector<double> b0 =
        config.initial_belief.empty() ? env.initial_belief : config.initial_belief;
    if (int(b0.size()) != S)
        throw ConfigError("config.initial_belief",
                          "needs " + std::to_string(S) + " entries");

    RngStream root(config.seed);
    Dbmm model = init_run_model(config, root.split(0));

    RunLogger log(config.out_dir + "/run.log");
    RunResult out;
    for (int i = 0; i < config.evaluations; ++i) {
        const auto t0 = Clock::now();
        EvaluationRecord rec;
        rec.evaluation = i;

        const std::string log_path =
            config.out_dir + "/trials_eval" + std::to_string(i) + ".jsonl";
        std::ofstream jsonl(log_path);
        if (!jsonl) abort_run("cannot open " + log_path);

        std::vector<RailwayTrial> trials;
        trials.reserve(config.trials);
        std::vector<CategoricalBelief> pred_flat, true_flat;
        std::vector<int> state_flat;
        for (int k = 0; k < config.trials; ++k) {
            RailwayTrial tr = simulate_railway_trial(
                env, b0, config.horizon, root.split(trial_stream_id(i, k)));
            append_trial_line(jsonl, k, tr);
            const auto pred = model.infer_trial_beliefs(tr);
            const auto truth = exact_trial_beliefs(env, b0, tr);
            for (int t = 1; t <= config.horizon; ++t) {
                pred_flat.push_back(pred[t]);
                true_flat.push_back(truth[t]);
                state_flat.push_back(tr.states[t]);
            }
            trials.push_back(std::move(tr));
        }
        jsonl.flush();
        if (!jsonl.good()) abort_run("cannot write " + log_path);

        categorical_metrics(pred_flat, true_flat, state_flat, S, rec);
        train_phase(model, trials, config, root.split(2000000 + uint64_t(i)), rec,
                    log);
        save_checkpoint(model, config.out_dir, i, rec);
        rec.wall_seconds = seconds_since(t0);
        char line[256];
        std::snprintf(line, sizeof(line),
                      "evaluation %d: ce_true=%.4f ce_pred=%.4f (%s)", i,
                      rec.ce_true, rec.ce_pred, fmt_secs(rec.wall_seconds).c_str());
        log.line(line);
        out.records.push_back(std::move(rec));
    }
    write_records_json(out.records, config, config.out_dir);
    return out;
}

} // namespace

RunResult run_evaluation(const RunConfig& config) {
    config.validate();
    prepare_out_dir(config.out_dir);
    if (config.benchmark == "discrete") return run_discrete(config);
    if (config.benchmark == "continuous") return run_continuous(config);
    return run_railway(config);
}

void run_simulate(const RunConfig& config) {
    config.validate();
    prepare_out_dir(config.out_dir);
    const std::string path = config.out_dir + "/trials_eval0.jsonl";
    std::ofstream jsonl(path);
    if (!jsonl) abort_run("cannot open " + path);
    RngStream root(config.seed);
    if (config.benchmark == "discrete") {
        const DiscretePOMDPModel env = bridge_benchmark_model();
        std::vector<double> b0 = config.initial_belief.empty()
                                     ? env.initial_belief
                                     : config.initial_belief;
        if (int(b0.size()) != env.n_states())
            throw ConfigError("config.initial_belief",
                              "needs " + std::to_string(env.n_states()) + " entries");
        for (int k = 0; k < config.trials; ++k)
            append_trial_line(jsonl, k,
                              simulate_discrete_trial(env, b0, config.horizon,
                                                      root.split(trial_stream_id(0, k))));
    } else if (config.benchmark == "continuous") {
        const ContinuousMaintenanceModel env;
        for (int k = 0; k < config.trials; ++k)
            append_trial_line(
                jsonl, k,
                simulate_continuous_trial(env, config.initial_state_mean,
                                          config.initial_state_std, config.horizon,
                                          root.split(trial_stream_id(0, k))));
    } else {
        const RailwayModelConfig env = config.railway_config_path.empty()
                                           ? default_railway_config()
                                           : load_railway_config(config.railway_config_path);
        env.validate();
        std::vector<double> b0 = config.initial_belief.empty()
                                     ? env.initial_belief
                                     : config.initial_belief;
        if (int(b0.size()) != env.n_states())
            throw ConfigError("config.initial_belief",
                              "needs " + std::to_string(env.n_states()) + " entries");
        for (int k = 0; k < config.trials; ++k)
            append_trial_line(jsonl, k,
                              simulate_railway_trial(env, b0, config.horizon,
                                                     root.split(trial_stream_id(0, k))));
    }
    jsonl.flush();
    if (!jsonl.good()) abort_run("cannot write " + path);
}

EvaluationRecord run_enkf_baseline(const RunConfig& config) {
    config.validate();
    if (config.benchmark != "continuous")
        throw ConfigError("config.benchmark",
                          "the EnKF baseline runs on the continuous benchmark only");
    prepare_out_dir(config.out_dir);

    const ContinuousMaintenanceModel env;
    RngStream root(config.seed);
    EvaluationRecord rec;
    rec.evaluation = 0;
    rec.ce_true = rec.ce_pred = rec.kl_true = rec.mse_pred = kNaN;
    rec.train_initial_loss = rec.train_final_loss = kNaN;

    RunLogger log(config.out_dir + "/enkf_run.log");
    std::vector<GaussianBelief> enkf_flat, truth_flat;
    std::vector<double> state_flat, obs_flat, mean_flat;
    int degenerate_updates = 0;
    for (int k = 0; k < config.trials; ++k) {
        RngStream trial_rng = root.split(trial_stream_id(0, k));
        ContinuousTrial tr = simulate_continuous_trial(
            env, config.initial_state_mean, config.initial_state_std,
            config.horizon, trial_rng);
        RngStream filter_rng = trial_rng.split(2);
        Ensemble ens = enkf_init(config.enkf_particles, config.initial_state_mean,
                                 config.initial_state_std, filter_rng);
        bool degen = false;
        ens = enkf_update(ens, tr.observations[0], env, filter_rng, &degen);
        if (degen) ++degenerate_updates;
        for (int t = 1; t <= config.horizon; ++t) {
            ens = enkf_predict(ens, tr.actions[t - 1], env, filter_rng);
            ens = enkf_update(ens, tr.observations[t], env, filter_rng, &degen);
            if (degen) ++degenerate_updates;
            const GaussianBelief mom = enkf_moments(ens);
            enkf_flat.push_back(mom);
            mean_flat.push_back(mom.mean);
            state_flat.push_back(tr.states[t]);
            obs_flat.push_back(tr.observations[t]);
            truth_flat.push_back(cont_true_next_distribution(
                tr.states[t - 1], tr.actions[t - 1], env));
        }
    }
    if (degenerate_updates > 0)
        log.line("warning: " + std::to_string(degenerate_updates) +
                 " degenerate updates skipped (zero predicted-observation variance)");

    rec.mse_obs = mse(obs_flat, state_flat);
    rec.mse_enkf = mse(mean_flat, state_flat);
    rec.kl_pred = kl_gaussian_sequence(enkf_flat, truth_flat);
    rec.reliability = reliability_curve(enkf_flat, state_flat);
    rec.has_reliability = true;
    rec.ks_pred = rec.reliability.ks;

    char line[256];
    std::snprintf(line, sizeof(line), "enkf baseline: mse_obs=%.5f mse_enkf=%.5f kl=%.4f",
                  rec.mse_obs, rec.mse_enkf, rec.kl_pred);
    log.line(line);
    return rec;
}

// ---- report export -----------------------------------------------------------

namespace {

struct CsvWriter {
    std::ofstream out;
    std::string path;
    explicit CsvWriter(const std::string& p) : out(p), path(p) {
        if (!out) abort_run("cannot open " + p);
    }
    void raw(const std::string& s) { out << s; }
    void num(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    }
    void done() {
        out.flush();
        if (!out.good()) abort_run("cannot write " + path);
    }
};

} // namespace

void export_report(const std::vector<EvaluationRecord>& records,
                   const std::string& out_dir, const std::string& prefix) {
    if (records.empty()) throw EmptyInput("export_report: no records");
    prepare_out_dir(out_dir);
    const std::string base = out_dir + "/" + prefix;

    {
        CsvWriter csv(base + "metrics.csv");
        csv.raw("evaluation,failed,ce_true,ce_pred,kl_true,kl_pred,mse_obs,"
                "mse_pred,mse_enkf,ks_pred,train_initial_loss,train_final_loss\n");
        for (const auto& r : records) {
            csv.raw(std::to_string(r.evaluation));
            csv.raw(",");
            csv.raw(r.failed ? "1" : "0");
            const double vals[] = {r.ce_true,  r.ce_pred,  r.kl_true,
                                   r.kl_pred,  r.mse_obs,  r.mse_pred,
                                   r.mse_enkf, r.ks_pred,  r.train_initial_loss,
                                   r.train_final_loss};
            for (double v : vals) {
                csv.raw(",");
                csv.num(v);
            }
            csv.raw("\n");
        }
        csv.done();
    }

    // MCA tables (categorical benchmarks)
    if (!records.front().mca_pred.accuracy.empty()) {
        ordered_json doc;
        ordered_json arr = ordered_json::array();
        for (const auto& r : records) {
            ordered_json e;
            e["evaluation"] = r.evaluation;
            e["mca_true"] = mca_to_json(r.mca_true);
            e["mca_pred"] = mca_to_json(r.mca_pred);
            arr.push_back(e);
        }
        doc["evaluations"] = arr;
        const std::string path = base + "tables.json";
        std::ofstream out(path);
        out << doc.dump(2) << '\n';
        if (!out.good()) abort_run("cannot write " + path);
    }

    // reliability curve of the latest evaluation that has one
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        if (!it->has_reliability) continue;
        CsvWriter csv(base + "reliability.csv");
        csv.raw("quantile,cdf\n");
        for (size_t i = 0; i < it->reliability.grid.size(); ++i) {
            csv.num(it->reliability.grid[i]);
            csv.raw(",");
            csv.num(it->reliability.cdf[i]);
            csv.raw("\n");
        }
        csv.done();
        break;
    }

    // plot-ready series (evaluation index vs metric), one file per figure
    auto series = [&](const std::string& name, const char* header,
                      auto&& getters) {
        bool any = false;
        for (const auto& r : records)
            for (double v : getters(r))
                if (std::isfinite(v)) any = true;
        if (!any) return;
        CsvWriter csv(base + name);
        csv.raw(header);
        for (const auto& r : records) {
            csv.raw(std::to_string(r.evaluation));
            for (double v : getters(r)) {
                csv.raw(",");
                csv.num(v);
            }
            csv.raw("\n");
        }
        csv.done();
    };
    series("series_ce.csv", "evaluation,ce_true,ce_pred\n",
           [](const EvaluationRecord& r) {
               return std::vector<double>{r.ce_true, r.ce_pred};
           });
    series("series_mse.csv", "evaluation,mse_obs,mse_pred,mse_enkf\n",
           [](const EvaluationRecord& r) {
               return std::vector<double>{r.mse_obs, r.mse_pred, r.mse_enkf};
           });
    series("series_kl.csv", "evaluation,kl_true,kl_pred\n",
           [](const EvaluationRecord& r) {
               return std::vector<double>{r.kl_true, r.kl_pred};
           });
}

std::vector<EvaluationRecord> load_records(const std::string& out_dir) {
    const std::string path = out_dir + "/records.json";
    std::ifstream in(path);
    if (!in) throw RunAborted("load_records: cannot open " + path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw RunAborted("load_records: parse failure in " + path + ": " +
                         e.what());
    }
    std::vector<EvaluationRecord> records;
    for (const auto& j : doc.at("records")) records.push_back(record_from_json(j));
    return records;
}

} // namespace dbmm
