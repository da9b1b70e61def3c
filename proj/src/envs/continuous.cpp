#include "dbmm/envs/continuous.hpp"

#include <algorithm>
#include <cmath>

#include "dbmm/core/errors.hpp"

namespace dbmm {

std::pair<double, double> cont_deterioration(double s) {
    if (!std::isfinite(s)) throw IndexError("cont_deterioration: non-finite state");
    const double mean = std::max(0.0, s - 0.5 * std::exp(-5.0 * s) - 1.0);
    const double std = (std::max(0.0, s) - std::max(0.0, mean)) / 2.0 + 0.02;
    return {mean, std};
}

GaussianBelief cont_true_next_distribution(double s, double a,
                                           const ContinuousMaintenanceModel& model) {
    if (!(a >= 0.0 && a <= 1.0)) {
        throw IndexError("cont env: action must lie in [0,1]");
    }
    const auto [det_mean, det_std] = cont_deterioration(s);
    GaussianBelief g;
    g.mean = model.replacement_mean * a + det_mean * (1.0 - a);
    g.std = model.replacement_std * a + det_std * (1.0 - a);
    return g;
}

double cont_observe(double s, const ContinuousMaintenanceModel& model, RngStream& rng) {
    return rng.normal(s, model.obs_noise_coeff * std::exp(s));
}

std::pair<double, double> cont_step(double s, double a,
                                    const ContinuousMaintenanceModel& model,
                                    RngStream& rng) {
    const GaussianBelief g = cont_true_next_distribution(s, a, model);
    const double next = rng.normal(g.mean, g.std);
    const double obs = cont_observe(next, model, rng);
    return {next, obs};
}

} // namespace dbmm
