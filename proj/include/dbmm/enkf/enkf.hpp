#pragma once

#include <vector>

#include "dbmm/core/rng.hpp"
#include "dbmm/core/types.hpp"
#include "dbmm/enkf/kalman.hpp"
#include "dbmm/envs/continuous.hpp"

namespace dbmm {

// Particle representation of the filtering distribution. Value type: the
// predict/update steps return a fresh ensemble.
struct Ensemble {
    std::vector<double> particles;
    size_t size() const { return particles.size(); }
};

// Ensemble drawn from a Gaussian initial-state distribution (std 0 = point
// mass, for the benchmark's known-new-component start).
Ensemble enkf_init(int n_particles, double mean, double std, RngStream& rng);

// Advance every particle through the true transition law with fresh noise.
Ensemble enkf_predict(const Ensemble& ens, double action,
                      const ContinuousMaintenanceModel& model, RngStream& rng);
Ensemble enkf_predict(const Ensemble& ens, const LinearGaussianSpec& spec,
                      RngStream& rng);

// Stochastic (perturbed-observation) analysis step. For each particle a
// predicted observation is drawn from the true observation law evaluated at
// that particle, y^_i = h(x_i) + eps_i; the gain is K = cov(x, y^)/var(y^)
// and the analysis particle is x_i + K (o - y^_i). Drawing eps_i inside y^_i
// and comparing against the *unperturbed* observation o is the standard
// perturbed-observation formulation: the same noise realization serves as
// the observation perturbation (equivalently, o is perturbed by -eps_i and
// compared with the noise-free prediction). Adding a second, independent
// perturbation on top of the noisy y^_i would double-count observation noise
// and inflate the analysis spread by ~sqrt(2).
//
// If the predicted observations are all identical (zero variance), the
// update is skipped and *degenerate is set when provided.
Ensemble enkf_update(const Ensemble& ens, double observation,
                     const ContinuousMaintenanceModel& model, RngStream& rng,
                     bool* degenerate = nullptr);
Ensemble enkf_update(const Ensemble& ens, double observation,
                     const LinearGaussianSpec& spec, RngStream& rng,
                     bool* degenerate = nullptr);

// Sample mean and unbiased sample std, std floored at 1e-8.
GaussianBelief enkf_moments(const Ensemble& ens);

} // namespace dbmm
