#include "dbmm/enkf/enkf.hpp"

#include <cmath>

#include "dbmm/core/errors.hpp"

namespace dbmm {

namespace {

void check_ensemble(const Ensemble& ens) {
    if (ens.particles.size() < 2)
        throw EmptyInput("enkf: ensemble needs at least 2 particles");
    for (double p : ens.particles)
        if (!std::isfinite(p)) throw IndexError("enkf: non-finite particle");
}

// Shared analysis step: predicted observations already drawn per particle.
Ensemble analyze(const Ensemble& ens, double observation,
                 const std::vector<double>& yhat, bool* degenerate) {
    const size_t n = ens.particles.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += ens.particles[i];
        my += yhat[i];
    }
    mx /= double(n);
    my /= double(n);
    double cxy = 0.0, vyy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = ens.particles[i] - mx;
        const double dy = yhat[i] - my;
        cxy += dx * dy;
        vyy += dy * dy;
    }
    if (degenerate) *degenerate = false;
    // No-information guard. "All predicted observations identical" has to be
    // judged against rounding dust: a collapsed ensemble under a noiseless
    // sensor leaves vyy at ~(eps*scale)^2 per particle, and dividing by that
    // would mint an O(1) gain out of noise. Anything within a comfortable
    // margin of that dust level (1e-12 relative spread) counts as degenerate;
    // genuine sensor noise sits many orders of magnitude above it.
    const double yscale = std::max(1.0, std::abs(my));
    if (vyy <= double(n) * (1e-12 * yscale) * (1e-12 * yscale)) {
        if (degenerate) *degenerate = true;
        return ens;
    }
    const double K = cxy / vyy;
    Ensemble out;
    out.particles.resize(n);
    for (size_t i = 0; i < n; ++i)
        out.particles[i] = ens.particles[i] + K * (observation - yhat[i]);
    return out;
}

} // namespace

Ensemble enkf_init(int n_particles, double mean, double std, RngStream& rng) {
    if (n_particles < 2)
        throw EmptyInput("enkf_init: need at least 2 particles");
    if (!(std >= 0.0) || !std::isfinite(mean))
        throw ConfigError("enkf.init", "mean must be finite and std >= 0");
    Ensemble ens;
    ens.particles.resize(size_t(n_particles));
    for (double& p : ens.particles)
        p = std > 0.0 ? rng.normal(mean, std) : mean;
    return ens;
}

Ensemble enkf_predict(const Ensemble& ens, double action,
                      const ContinuousMaintenanceModel& model, RngStream& rng) {
    check_ensemble(ens);
    Ensemble out;
    out.particles.resize(ens.particles.size());
    for (size_t i = 0; i < ens.particles.size(); ++i) {
        const GaussianBelief law =
            cont_true_next_distribution(ens.particles[i], action, model);
        out.particles[i] = rng.normal(law.mean, law.std);
    }
    return out;
}

Ensemble enkf_predict(const Ensemble& ens, const LinearGaussianSpec& spec,
                      RngStream& rng) {
    check_ensemble(ens);
    spec.validate();
    Ensemble out;
    out.particles.resize(ens.particles.size());
    for (size_t i = 0; i < ens.particles.size(); ++i)
        out.particles[i] = spec.a * ens.particles[i] + rng.normal(0.0, spec.q);
    return out;
}

Ensemble enkf_update(const Ensemble& ens, double observation,
                     const ContinuousMaintenanceModel& model, RngStream& rng,
                     bool* degenerate) {
    check_ensemble(ens);
    std::vector<double> yhat(ens.particles.size());
    for (size_t i = 0; i < ens.particles.size(); ++i) {
        // state-dependent noise: the true law o|s = N(s, coeff*exp(s)) is
        // evaluated at each particle
        const double s = ens.particles[i];
        yhat[i] = rng.normal(s, model.obs_noise_coeff * std::exp(s));
    }
    return analyze(ens, observation, yhat, degenerate);
}

Ensemble enkf_update(const Ensemble& ens, double observation,
                     const LinearGaussianSpec& spec, RngStream& rng,
                     bool* degenerate) {
    check_ensemble(ens);
    spec.validate();
    std::vector<double> yhat(ens.particles.size());
    for (size_t i = 0; i < ens.particles.size(); ++i)
        yhat[i] = spec.h * ens.particles[i] + rng.normal(0.0, spec.r);
    return analyze(ens, observation, yhat, degenerate);
}

GaussianBelief enkf_moments(const Ensemble& ens) {
    check_ensemble(ens);
    const size_t n = ens.particles.size();
    double mean = 0.0;
    for (double p : ens.particles) mean += p;
    mean /= double(n);
    double ss = 0.0;
    for (double p : ens.particles) ss += (p - mean) * (p - mean);
    double std = std::sqrt(ss / double(n - 1));
    if (!(std > 1e-8)) std = 1e-8;
    return GaussianBelief{mean, std};
}

} // namespace dbmm
