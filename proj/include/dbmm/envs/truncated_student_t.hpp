#pragma once

#include "dbmm/core/rng.hpp"

namespace dbmm {

// Student's t(mu, sigma, nu) truncated to (-inf, ub]. ub may be +infinity
// (untruncated). Sampling goes through the inverse CDF on the truncated
// mass; when the truncation keeps less than 1e-6 of the distribution the
// sampler falls back to bounded rejection from the untruncated law (and,
// if that budget is exhausted, to the inverse-CDF value, which is exact but
// operates on a sub-resolution uniform). Samples never exceed ub.
double ts_sample(double mu, double sigma, double nu, double ub, RngStream& rng);

// log density; returns -infinity for x > ub (documented sentinel).
double ts_log_pdf(double x, double mu, double sigma, double nu, double ub);

} // namespace dbmm
