#include "dbmm/envs/railway.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "dbmm/core/errors.hpp"
#include "dbmm/core/math.hpp"
#include "dbmm/envs/truncated_student_t.hpp"

namespace dbmm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

void RailwayModelConfig::validate() const {
    const int S = n_states();
    const int A = n_actions();
    if (S <= 0 || A < 2) {
        throw ConfigError("railway.transition", "need >= 2 actions and >= 1 state");
    }
    for (int a = 0; a < A; ++a) {
        const auto& P = transition[static_cast<size_t>(a)];
        if (static_cast<int>(P.size()) != S) {
            throw ConfigError("railway.transition[" + std::to_string(a) + "]",
                              "row count != n_states");
        }
        for (int s = 0; s < S; ++s) {
            const auto& row = P[static_cast<size_t>(s)];
            if (static_cast<int>(row.size()) != S) {
                throw ConfigError("railway.transition[" + std::to_string(a) + "][" +
                                      std::to_string(s) + "]",
                                  "column count != n_states");
            }
            double total = 0.0;
            for (double p : row) {
                if (!(p >= 0.0 && p <= 1.0)) {
                    throw ConfigError("railway.transition[" + std::to_string(a) + "][" +
                                          std::to_string(s) + "]",
                                      "entry outside [0,1]");
                }
                total += p;
            }
            if (std::fabs(total - 1.0) > 1e-9) {
                throw ConfigError("railway.transition[" + std::to_string(a) + "][" +
                                      std::to_string(s) + "]",
                                  "row sum " + std::to_string(total) + " != 1");
            }
        }
    }
    auto check_ts = [S](const std::vector<TSParams>& v, const char* name) {
        if (static_cast<int>(v.size()) != S) {
            throw ConfigError(std::string("railway.") + name, "length != n_states");
        }
        for (size_t i = 0; i < v.size(); ++i) {
            if (!(v[i].sigma > 0.0)) {
                throw ConfigError(std::string("railway.") + name + "[" +
                                      std::to_string(i) + "].sigma",
                                  "must be > 0");
            }
            if (!(v[i].nu > 2.0)) {
                throw ConfigError(std::string("railway.") + name + "[" +
                                      std::to_string(i) + "].nu",
                                  "must be > 2");
            }
        }
    };
    check_ts(init, "init");
    check_ts(degrade, "degrade");
    check_ts(repair, "repair");
    if (static_cast<int>(repair_k.size()) != A - 1) {
        throw ConfigError("railway.repair_k", "length must be n_actions - 1");
    }
    if (static_cast<int>(initial_belief.size()) != S) {
        throw ConfigError("railway.initial_belief", "length != n_states");
    }
    double total = 0.0;
    for (double p : initial_belief) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ConfigError("railway.initial_belief", "entry outside [0,1]");
        }
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
        throw ConfigError("railway.initial_belief", "does not sum to 1");
    }
}

RailwayModelConfig default_railway_config() {
    RailwayModelConfig c;
    // State 0 is freshly maintained track, state 3 severely degraded. The
    // signal is the (negative) track-geometry deviation: deeper in worse
    // condition, degrading faster in worse condition.
    c.transition = {
        // action 0: do-nothing (monotone degradation chain)
        {{0.85, 0.12, 0.025, 0.005},
         {0.00, 0.80, 0.15, 0.05},
         {0.00, 0.00, 0.80, 0.20},
         {0.00, 0.00, 0.00, 1.00}},
        // action 1: tamping (partial restoration)
        {{0.95, 0.04, 0.01, 0.00},
         {0.70, 0.25, 0.05, 0.00},
         {0.10, 0.60, 0.25, 0.05},
         {0.00, 0.20, 0.50, 0.30}},
        // action 2: renewal (near-complete restoration)
        {{0.98, 0.02, 0.00, 0.00},
         {0.90, 0.08, 0.02, 0.00},
         {0.80, 0.15, 0.05, 0.00},
         {0.70, 0.20, 0.08, 0.02}},
    };
    c.init = {{-0.3, 0.3, 5.0}, {-1.0, 0.4, 5.0}, {-2.0, 0.5, 5.0}, {-3.5, 0.7, 5.0}};
    c.degrade = {{-0.05, 0.10, 5.0}, {-0.15, 0.15, 5.0}, {-0.40, 0.20, 5.0}, {-0.80, 0.30, 5.0}};
    c.repair = {{-0.3, 0.30, 5.0}, {-0.8, 0.35, 5.0}, {-1.5, 0.40, 5.0}, {-2.5, 0.50, 5.0}};
    c.repair_k = {0.5, 0.1}; // retained fraction of the old signal per repair
    c.initial_belief = {1.0, 0.0, 0.0, 0.0};
    c.validate();
    return c;
}

namespace {

std::vector<TSParams> parse_ts_list(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_array()) {
        throw ConfigError("railway." + key, "missing or not an array");
    }
    std::vector<TSParams> out;
    for (size_t i = 0; i < j[key].size(); ++i) {
        const auto& e = j[key][i];
        const std::string where = "railway." + key + "[" + std::to_string(i) + "]";
        if (!e.is_object() || !e.contains("mu") || !e.contains("sigma") || !e.contains("nu")) {
            throw ConfigError(where, "expected object with mu/sigma/nu");
        }
        TSParams p;
        p.mu = e["mu"].get<double>();
        p.sigma = e["sigma"].get<double>();
        p.nu = e["nu"].get<double>();
        out.push_back(p);
    }
    return out;
}

} // namespace

RailwayModelConfig load_railway_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("railway", "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("railway", "JSON parse failure in '" + path + "': " + e.what());
    }
    RailwayModelConfig c;
    try {
        if (!j.contains("transition")) throw ConfigError("railway.transition", "missing");
        c.transition =
            j["transition"].get<std::vector<std::vector<std::vector<double>>>>();
        c.init = parse_ts_list(j, "init");
        c.degrade = parse_ts_list(j, "degrade");
        c.repair = parse_ts_list(j, "repair");
        if (!j.contains("repair_k")) throw ConfigError("railway.repair_k", "missing");
        c.repair_k = j["repair_k"].get<std::vector<double>>();
        if (!j.contains("initial_belief")) {
            throw ConfigError("railway.initial_belief", "missing");
        }
        c.initial_belief = j["initial_belief"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("railway", std::string("malformed field: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

void check_step_inputs(int state, double z_prev, int t, int action,
                       const RailwayModelConfig& config) {
    if (state < 0 || state >= config.n_states()) {
        throw IndexError("railway_step: state out of range");
    }
    if (t > 0 && (action < 0 || action >= config.n_actions())) {
        throw IndexError("railway_step: action out of range");
    }
    if (t > 0 && !(z_prev <= 0.0)) {
        throw IndexError("railway_step: z_prev must be <= 0 for t > 0");
    }
}

} // namespace

std::pair<int, double> railway_step(int state, double z_prev, int t, int action,
                                    const RailwayModelConfig& config, RngStream& rng) {
    check_step_inputs(state, z_prev, t, action, config);
    if (t == 0) {
        const TSParams& p = config.init[static_cast<size_t>(state)];
        return {state, ts_sample(p.mu, p.sigma, p.nu, 0.0, rng)};
    }
    const int next = rng.categorical(
        config.transition[static_cast<size_t>(action)][static_cast<size_t>(state)]);
    if (action == 0) {
        const TSParams& p = config.degrade[static_cast<size_t>(next)];
        const double incr = ts_sample(p.mu, p.sigma, p.nu, -z_prev, rng);
        return {next, z_prev + incr};
    }
    const TSParams& p = config.repair[static_cast<size_t>(next)];
    const double k = config.repair_k[static_cast<size_t>(action - 1)];
    return {next, ts_sample(k * z_prev + p.mu, p.sigma, p.nu, 0.0, rng)};
}

CategoricalBelief railway_exact_belief_update(const CategoricalBelief& b, int action,
                                              double z, double z_prev, int t,
                                              const RailwayModelConfig& config) {
    const int S = config.n_states();
    if (static_cast<int>(b.size()) != S) {
        throw ShapeError("railway_exact_belief_update: belief length mismatch");
    }

    // Prior over the state the signal is attached to.
    CategoricalBelief prior;
    if (t == 0) {
        prior = b;
    } else {
        if (action < 0 || action >= config.n_actions()) {
            throw IndexError("railway_exact_belief_update: action out of range");
        }
        prior.assign(static_cast<size_t>(S), 0.0);
        const auto& P = config.transition[static_cast<size_t>(action)];
        for (int s = 0; s < S; ++s) {
            const double w = b[static_cast<size_t>(s)];
            if (w == 0.0) continue;
            for (int s2 = 0; s2 < S; ++s2) {
                prior[static_cast<size_t>(s2)] +=
                    w * P[static_cast<size_t>(s)][static_cast<size_t>(s2)];
            }
        }
    }

    // Case-matched log likelihood of z per candidate state, combined with
    // the log prior; softmax-normalized for stability.
    std::vector<double> logw(static_cast<size_t>(S), -kInf);
    for (int s = 0; s < S; ++s) {
        const double pw = prior[static_cast<size_t>(s)];
        if (pw <= 0.0) continue;
        double ll;
        if (t == 0) {
            const TSParams& p = config.init[static_cast<size_t>(s)];
            ll = ts_log_pdf(z, p.mu, p.sigma, p.nu, 0.0);
        } else if (action == 0) {
            const TSParams& p = config.degrade[static_cast<size_t>(s)];
            ll = ts_log_pdf(z - z_prev, p.mu, p.sigma, p.nu, -z_prev);
        } else {
            const TSParams& p = config.repair[static_cast<size_t>(s)];
            const double k = config.repair_k[static_cast<size_t>(action - 1)];
            ll = ts_log_pdf(z, k * z_prev + p.mu, p.sigma, p.nu, 0.0);
        }
        if (std::isfinite(ll)) {
            logw[static_cast<size_t>(s)] = std::log(pw) + ll;
        }
    }

    double mx = -kInf;
    for (double w : logw) mx = std::max(mx, w);
    if (!std::isfinite(mx)) {
        throw DegenerateBelief("railway_exact_belief_update: observation has zero "
                               "density under every state in the prior");
    }
    CategoricalBelief post(static_cast<size_t>(S));
    for (int s = 0; s < S; ++s) {
        post[static_cast<size_t>(s)] =
            std::exp(logw[static_cast<size_t>(s)] - mx);
    }
    normalize(post);
    return post;
}

} // namespace dbmm
