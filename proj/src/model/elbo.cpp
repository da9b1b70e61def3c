#include "dbmm/model/elbo.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "dbmm/autodiff/heads.hpp"
#include "dbmm/core/errors.hpp"
#include "dbmm/core/math.hpp"
#include "dbmm/kernels/kernels.hpp"

namespace dbmm {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("train.learning_rate", "must be positive and finite");
    if (epochs < 0) throw ConfigError("train.epochs", "must be >= 0");
    if (minibatch <= 0) throw ConfigError("train.minibatch", "must be positive");
    if (mc_samples <= 0) throw ConfigError("train.mc_samples", "must be positive");
    if (!(clip_norm > 0.0)) throw ConfigError("train.clip_norm", "must be positive");
}

DbmmGradients::DbmmGradients(const Dbmm& model)
    : omega(model.omega().param_count(), 0.0),
      psi(model.psi().param_count(), 0.0),
      kappa(model.kappa().param_count(), 0.0),
      prior(model.prior_params().size(), 0.0) {}

void DbmmGradients::zero() {
    std::fill(omega.begin(), omega.end(), 0.0);
    std::fill(psi.begin(), psi.end(), 0.0);
    std::fill(kappa.begin(), kappa.end(), 0.0);
    std::fill(prior.begin(), prior.end(), 0.0);
}

double DbmmGradients::global_norm() const {
    double ss = kernels::sumsq(omega.data(), omega.size()) +
                kernels::sumsq(psi.data(), psi.size()) +
                kernels::sumsq(kappa.data(), kappa.size()) +
                kernels::sumsq(prior.data(), prior.size());
    return std::sqrt(ss);
}

void DbmmGradients::scale(double c) {
    kernels::scale(c, omega.data(), omega.size());
    kernels::scale(c, psi.data(), psi.size());
    kernels::scale(c, kappa.data(), kappa.size());
    kernels::scale(c, prior.data(), prior.size());
}

namespace {

[[noreturn]] void throw_non_finite(size_t trial, int step, double lik, double kl) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "non-finite objective at trial %zu step %d (lik=%g, kl=%g)",
                  trial, step, lik, kl);
    throw NonFiniteLoss(std::string("elbo: ") + buf);
}

template <class TrialT>
int checked_horizon(const TrialT& tr, size_t index) {
    const int T = tr.horizon();
    if (T < 1)
        throw InsufficientData("elbo: trial " + std::to_string(index) +
                               " has no transitions");
    if (tr.observations.size() != tr.actions.size() + 1)
        throw ShapeError("elbo: trial " + std::to_string(index) +
                         " needs one observation per step plus the initial one");
    return T;
}

// Per-step buffers for one categorical trial (discrete + railway modes share
// the chain recursion; only the likelihood term differs). Step t = 0 has no
// omega application: its prior is the learnable initial prior itself.
struct CatStep {
    Tape ti, tp;                  // omega (t >= 1 only), psi
    std::vector<double> prior;    // t = 0: p0; else softmax(omega(post_{t-1}, a))
    std::vector<double> post;     // posterior, post-softmax
    std::vector<double> ll;       // log p(o_t | s) per state
};

// Rolls the inference chain for one trial — the same chain the belief readout
// uses, so training optimizes exactly what the metrics measure. The KL at
// step t is taken against the chain's own propagated prior; with exact-Bayes
// networks every term equals log p(o_t | o_{<t}) and the objective is the
// sequence log-likelihood. steps must have T + 1 entries (one per
// observation). log_lik(t, step) runs psi on (step.prior, o_t) and fills
// step.post / step.ll.
template <class LogLik>
double cat_forward(const Dbmm& model, int T, const std::vector<int>& actions,
                   const std::vector<double>& p0, std::vector<CatStep>& steps,
                   LogLik&& log_lik, size_t trial_index, bool want_grads) {
    const int S = model.dims().n_states;
    const int A = model.dims().n_actions;
    std::vector<double> u(S + A), raw(S);
    double total = 0.0;
    for (int t = 0; t <= T; ++t) {
        CatStep& st = steps[size_t(t)];
        if (t == 0) {
            st.prior = p0;
        } else {
            const int a = actions[size_t(t) - 1];
            if (a < 0 || a >= A)
                throw IndexError("elbo: action out of range in trial " +
                                 std::to_string(trial_index));
            std::fill(u.begin(), u.end(), 0.0);
            const auto& prev = steps[size_t(t) - 1].post;
            std::copy(prev.begin(), prev.end(), u.begin());
            u[size_t(S + a)] = 1.0;
            model.omega().forward(u.data(), raw.data(),
                                  want_grads ? &st.ti : nullptr);
            st.prior = softmax(raw);
        }

        st.ll.resize(S);
        log_lik(t, st);

        double lik = kernels::dot(st.post.data(), st.ll.data(), S);
        double kl = categorical_kl(st.post, st.prior);
        if (!std::isfinite(lik) || !std::isfinite(kl))
            throw_non_finite(trial_index, t, lik, kl);
        total += lik - kl;
    }
    return total;
}

// Shared categorical backward pass. wt multiplies every per-step term of the
// LOSS (loss = -sum_t(lik_t - kl_t) * wt for this trial), lik_backward(t,
// step, wt) must add the likelihood adjoints (it receives d loss / d ll
// implicitly via -wt * post and handles kappa's backward itself).
template <class LikBackward>
void cat_backward(const Dbmm& model, int T, const std::vector<double>& p0,
                  std::vector<CatStep>& steps, double wt, DbmmGradients& g,
                  LikBackward&& lik_backward) {
    const int S = model.dims().n_states;
    const int A = model.dims().n_actions;
    const int psi_in = model.psi().in_dim();
    std::vector<double> dpost(S), dprior(S), dcarry(S, 0.0);
    std::vector<double> dvi(psi_in), dui(S + A);
    for (int t = T; t >= 0; --t) {
        CatStep& st = steps[size_t(t)];
        dpost = dcarry; // from step t+1's omega input
        std::fill(dprior.begin(), dprior.end(), 0.0);
        for (int s = 0; s < S; ++s) {
            // expected log-likelihood: lik = sum_s post_s * ll_s
            dpost[s] += -wt * st.ll[s];
            // KL(post || prior): d/dpost_s = log post_s + 1 - log prior_s
            const double p = std::max(st.prior[s], 1e-12);
            if (st.post[s] > 0.0)
                dpost[s] += wt * (std::log(st.post[s]) + 1.0 - std::log(p));
            if (st.prior[s] > 1e-12) dprior[s] += wt * (-st.post[s] / st.prior[s]);
        }
        lik_backward(t, st, wt); // likelihood path into kappa

        std::vector<double> dh = softmax_backward(st.post, dpost);
        std::fill(dvi.begin(), dvi.end(), 0.0);
        model.psi().backward(st.tp, dh.data(), g.psi, dvi.data());
        for (int s = 0; s < S; ++s) dprior[s] += dvi[s]; // psi input path

        if (t == 0) {
            // the chain starts at p0 = softmax(prior logits)
            std::vector<double> dlogits = softmax_backward(p0, dprior);
            kernels::axpy(1.0, dlogits.data(), g.prior.data(), S);
        } else {
            std::vector<double> dgi = softmax_backward(st.prior, dprior);
            std::fill(dui.begin(), dui.end(), 0.0);
            model.omega().backward(st.ti, dgi.data(), g.omega, dui.data());
            std::copy(dui.begin(), dui.begin() + S, dcarry.begin());
        }
    }
}

} // namespace

// --- discrete-belief mode -------------------------------------------------

ElboResult elbo(const Dbmm& model, const std::vector<DiscreteTrial>& batch,
                const TrainConfig& cfg, RngStream rng, bool want_grads) {
    (void)cfg;
    (void)rng;
    if (model.mode() != BeliefMode::DiscreteBelief)
        throw ShapeError("elbo: discrete trials require a discrete-belief model");
    if (batch.empty()) throw EmptyInput("elbo: empty batch");
    const int S = model.dims().n_states;
    const int O = model.dims().n_obs;

    ElboResult res{0.0, DbmmGradients(model)};

    // kappa depends only on the state in this mode: forward each state once
    // and accumulate upstream gradients on the log-probabilities across the
    // whole batch, then run a single backward per state.
    std::vector<Tape> ktapes(S);
    std::vector<std::vector<double>> klogp(S), kprob(S);
    std::vector<std::vector<double>> dklogp(S, std::vector<double>(O, 0.0));
    {
        std::vector<double> x(S), raw(O);
        for (int s = 0; s < S; ++s) {
            std::fill(x.begin(), x.end(), 0.0);
            x[s] = 1.0;
            model.kappa().forward(x.data(), raw.data(),
                                  want_grads ? &ktapes[s] : nullptr);
            klogp[s] = log_softmax(raw);
            kprob[s] = softmax(raw);
        }
    }

    const std::vector<double> p0 = model.initial_prior_categorical();
    std::vector<CatStep> steps;
    const int psi_in = model.psi().in_dim();
    std::vector<double> vi(psi_in), rawp(S);

    for (size_t k = 0; k < batch.size(); ++k) {
        const DiscreteTrial& tr = batch[k];
        const int T = checked_horizon(tr, k);
        steps.assign(size_t(T) + 1, CatStep{});
        double total = cat_forward(
            model, T, tr.actions, p0, steps,
            [&](int t, CatStep& st) {
                const int o = tr.observations[size_t(t)];
                if (o < 0 || o >= O)
                    throw IndexError("elbo: observation out of range in trial " +
                                     std::to_string(k));
                std::fill(vi.begin(), vi.end(), 0.0);
                std::copy(st.prior.begin(), st.prior.end(), vi.begin());
                vi[size_t(S + o)] = 1.0;
                model.psi().forward(vi.data(), rawp.data(),
                                    want_grads ? &st.tp : nullptr);
                st.post = softmax(rawp);
                for (int s = 0; s < S; ++s) st.ll[s] = klogp[s][o];
            },
            k, want_grads);
        res.loss += -total / (T + 1);
        if (want_grads) {
            const double wt = 1.0 / (double(T + 1) * double(batch.size()));
            cat_backward(model, T, p0, steps, wt, res.grads,
                         [&](int t, const CatStep& st, double w) {
                             const int o = tr.observations[size_t(t)];
                             for (int s = 0; s < S; ++s)
                                 dklogp[s][o] += -w * st.post[s];
                         });
        }
    }
    res.loss /= double(batch.size());

    if (want_grads) {
        for (int s = 0; s < S; ++s) {
            std::vector<double> dlogits = log_softmax_backward(kprob[s], dklogp[s]);
            model.kappa().backward(ktapes[s], dlogits.data(), res.grads.kappa);
        }
    }
    return res;
}

// --- railway mode -----------------------------------------------------------

ElboResult elbo(const Dbmm& model, const std::vector<RailwayTrial>& batch,
                const TrainConfig& cfg, RngStream rng, bool want_grads) {
    (void)cfg;
    (void)rng;
    if (model.mode() != BeliefMode::Railway)
        throw ShapeError("elbo: railway trials require a railway model");
    if (batch.empty()) throw EmptyInput("elbo: empty batch");
    const int S = model.dims().n_states;
    const int A = model.dims().n_actions;

    ElboResult res{0.0, DbmmGradients(model)};

    const std::vector<double> p0 = model.initial_prior_categorical();
    std::vector<CatStep> steps;
    const int psi_in = model.psi().in_dim();   // S + 2 (prior, z_t, z_{t-1})
    const int kap_in = model.kappa().in_dim(); // S + A + 1
    std::vector<double> vi(psi_in), rawp(S), xk(kap_in), rawk(2);

    // per-(t,s) kappa records for the backward pass
    struct KapRec {
        Tape tape;
        double raw[2];
        GaussianParams par;
    };
    std::vector<KapRec> krecs; // T * S, step-major

    for (size_t k = 0; k < batch.size(); ++k) {
        const RailwayTrial& tr = batch[k];
        const int T = checked_horizon(tr, k);
        steps.assign(size_t(T) + 1, CatStep{});
        if (want_grads) krecs.assign(size_t(T + 1) * S, KapRec{});
        double total = cat_forward(
            model, T, tr.actions, p0, steps,
            [&](int t, CatStep& st) {
                const double z = tr.observations[size_t(t)];
                // t = 0 is the fresh-inspection signal: no previous action or
                // signal exists, so those inputs are zeroed (z_prev = 0 never
                // occurs later — signals are strictly negative).
                const double z_prev =
                    t == 0 ? 0.0 : tr.observations[size_t(t) - 1];
                std::fill(vi.begin(), vi.end(), 0.0);
                std::copy(st.prior.begin(), st.prior.end(), vi.begin());
                vi[size_t(S)] = z;
                vi[size_t(S) + 1] = z_prev;
                model.psi().forward(vi.data(), rawp.data(),
                                    want_grads ? &st.tp : nullptr);
                st.post = softmax(rawp);
                for (int s = 0; s < S; ++s) {
                    std::fill(xk.begin(), xk.end(), 0.0);
                    xk[size_t(s)] = 1.0;
                    if (t > 0) xk[size_t(S + tr.actions[size_t(t) - 1])] = 1.0;
                    xk[size_t(S + A)] = z_prev;
                    KapRec* rec =
                        want_grads ? &krecs[size_t(t) * S + s] : nullptr;
                    model.kappa().forward(xk.data(), rawk.data(),
                                          rec ? &rec->tape : nullptr);
                    GaussianParams par = gaussian_head(rawk.data());
                    if (rec) {
                        rec->raw[0] = rawk[0];
                        rec->raw[1] = rawk[1];
                        rec->par = par;
                    }
                    st.ll[s] =
                        truncated_normal_log_pdf(z, par.mean, par.std, 0.0);
                }
            },
            k, want_grads);
        res.loss += -total / (T + 1);
        if (want_grads) {
            const double wt = 1.0 / (double(T + 1) * double(batch.size()));
            cat_backward(model, T, p0, steps, wt, res.grads,
                         [&](int t, const CatStep& st, double w) {
                             const double z = tr.observations[size_t(t)];
                             for (int s = 0; s < S; ++s) {
                                 KapRec& rec = krecs[size_t(t) * S + s];
                                 const double up = -w * st.post[s];
                                 if (up == 0.0) continue;
                                 double dmu, dsd;
                                 truncated_normal_log_pdf_grad(
                                     z, rec.par.mean, rec.par.std, 0.0, &dmu, &dsd);
                                 double draw[2];
                                 gaussian_head_backward(rec.raw, up * dmu,
                                                        up * dsd, draw);
                                 model.kappa().backward(rec.tape, draw,
                                                        res.grads.kappa);
                             }
                         });
        }
    }
    res.loss /= double(batch.size());
    return res;
}

// --- gaussian mode ----------------------------------------------------------

ElboResult elbo(const Dbmm& model, const std::vector<ContinuousTrial>& batch,
                const TrainConfig& cfg, RngStream rng, bool want_grads) {
    if (model.mode() != BeliefMode::Gaussian)
        throw ShapeError("elbo: continuous trials require a gaussian model");
    if (batch.empty()) throw EmptyInput("elbo: empty batch");
    const int M = cfg.mc_samples;
    if (M <= 0) throw ConfigError("train.mc_samples", "must be positive");

    ElboResult res{0.0, DbmmGradients(model)};

    struct GStep {
        Tape ti, tp;                    // omega (t >= 1 only), psi
        double rawi[2], rawp[2];
        GaussianParams prior, post;     // t = 0 prior is p0 itself
        std::vector<double> eps;        // one per mc sample
        std::vector<double> rawk;       // 2 per sample
        std::vector<GaussianParams> ko; // observation law per sample
        std::vector<Tape> tk;
    };
    std::vector<GStep> steps;

    const double* prior_raw = model.prior_params().data();
    const GaussianParams p0 = model.initial_prior_gaussian();

    double x3[3], raw2[2], xk1[1];

    for (size_t k = 0; k < batch.size(); ++k) {
        const ContinuousTrial& tr = batch[k];
        const int T = checked_horizon(tr, k);
        RngStream trial_rng = rng.split(k);
        steps.assign(size_t(T) + 1, GStep{});
        double total = 0.0;
        for (int t = 0; t <= T; ++t) {
            GStep& st = steps[size_t(t)];
            const double o = tr.observations[size_t(t)];

            if (t == 0) {
                st.prior = p0;
            } else {
                const GaussianParams& prev = steps[size_t(t) - 1].post;
                x3[0] = prev.mean;
                x3[1] = prev.std;
                x3[2] = tr.actions[size_t(t) - 1];
                model.omega().forward(x3, st.rawi,
                                      want_grads ? &st.ti : nullptr);
                st.prior = gaussian_head(st.rawi);
            }

            x3[0] = st.prior.mean; x3[1] = st.prior.std; x3[2] = o;
            model.psi().forward(x3, st.rawp, want_grads ? &st.tp : nullptr);
            st.post = gaussian_head(st.rawp);

            st.eps.resize(M);
            st.rawk.resize(2 * M);
            st.ko.resize(M);
            if (want_grads) st.tk.resize(M);
            double lik = 0.0;
            for (int m = 0; m < M; ++m) {
                st.eps[m] = trial_rng.normal();
                xk1[0] = st.post.mean + st.post.std * st.eps[m];
                model.kappa().forward(xk1, raw2,
                                      want_grads ? &st.tk[m] : nullptr);
                st.rawk[2 * m] = raw2[0];
                st.rawk[2 * m + 1] = raw2[1];
                st.ko[m] = gaussian_head(raw2);
                lik += gaussian_log_pdf(o, st.ko[m].mean, st.ko[m].std);
            }
            lik /= M;
            const double kl = gaussian_kl(st.post, st.prior);
            if (!std::isfinite(lik) || !std::isfinite(kl))
                throw_non_finite(k, t, lik, kl);
            total += lik - kl;
        }
        res.loss += -total / (T + 1);

        if (!want_grads) continue;
        const double wt = 1.0 / (double(T + 1) * double(batch.size()));
        double dm_carry = 0.0, ds_carry = 0.0; // into post of step t-1
        double draw[2], din[3], dxk[1];
        for (int t = T; t >= 0; --t) {
            GStep& st = steps[size_t(t)];
            const double o = tr.observations[size_t(t)];
            double dpm = dm_carry, dps = ds_carry; // d loss / d post.{mean,std}
            double dprm = 0.0, dprs = 0.0;         // d loss / d prior.{mean,std}

            for (int m = 0; m < M; ++m) {
                const double up = -wt / M;
                double dmu, dsd;
                gaussian_log_pdf_grad(o, st.ko[m].mean, st.ko[m].std, &dmu, &dsd);
                gaussian_head_backward(&st.rawk[2 * m], up * dmu, up * dsd, draw);
                dxk[0] = 0.0;
                model.kappa().backward(st.tk[m], draw, res.grads.kappa, dxk);
                dpm += dxk[0];
                dps += dxk[0] * st.eps[m];
            }

            double dqm, dqs, dpm2, dps2;
            gaussian_kl_grad(st.post, st.prior, &dqm, &dqs, &dpm2, &dps2);
            dpm += wt * dqm;
            dps += wt * dqs;
            dprm += wt * dpm2;
            dprs += wt * dps2;

            gaussian_head_backward(st.rawp, dpm, dps, draw);
            std::fill(din, din + 3, 0.0);
            model.psi().backward(st.tp, draw, res.grads.psi, din);
            dprm += din[0]; // psi input path
            dprs += din[1];

            if (t == 0) {
                gaussian_head_backward(prior_raw, dprm, dprs, draw);
                res.grads.prior[0] += draw[0];
                res.grads.prior[1] += draw[1];
            } else {
                gaussian_head_backward(st.rawi, dprm, dprs, draw);
                std::fill(din, din + 3, 0.0);
                model.omega().backward(st.ti, draw, res.grads.omega, din);
                dm_carry = din[0];
                ds_carry = din[1];
            }
        }
    }
    res.loss /= double(batch.size());
    return res;
}

} // namespace dbmm
