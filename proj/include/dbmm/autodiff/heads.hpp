#pragma once

#include <vector>

namespace dbmm {

class RngStream;

// Output heads and loss pieces that sit on top of DenseNet raw outputs,
// together with their hand-derived partials. Conventions: `*_backward`
// routines take the upstream gradient and *return/accumulate* the
// downstream one; nothing here touches net parameters.

// ---- categorical ----------------------------------------------------------

std::vector<double> softmax(const std::vector<double>& logits);
// Given p = softmax(z) and upstream dL/dp, returns dL/dz:
//   dz_i = p_i * (dp_i - sum_j p_j dp_j)
std::vector<double> softmax_backward(const std::vector<double>& probs,
                                     const std::vector<double>& dprobs);

std::vector<double> log_softmax(const std::vector<double>& logits);
// Given p = softmax(z) and upstream dL/d(log p), returns dL/dz:
//   dz_i = dlp_i - p_i * sum_j dlp_j
std::vector<double> log_softmax_backward(const std::vector<double>& probs,
                                         const std::vector<double>& dlogp);

// KL(q || p) for categorical distributions with p floored at `floor` inside
// the log (q entries of exactly 0 contribute 0).
double categorical_kl(const std::vector<double>& q, const std::vector<double>& p,
                      double floor = 1e-12);

// ---- gaussian --------------------------------------------------------------

// Head mapping two raw outputs to (mean, std): mean = raw[0],
// std = softplus(raw[1]) + std_floor. The floor keeps densities finite.
struct GaussianParams {
    double mean;
    double std;
};
constexpr double kStdFloor = 1e-4;

GaussianParams gaussian_head(const double* raw);
// Maps upstream (dmean, dstd) back to gradients on the two raw outputs.
void gaussian_head_backward(const double* raw, double dmean, double dstd,
                            double* draw);

double gaussian_log_pdf(double x, double mean, double std);
// Partials of gaussian_log_pdf w.r.t. mean and std.
void gaussian_log_pdf_grad(double x, double mean, double std, double* dmean,
                           double* dstd);

// KL(N(q) || N(p)) between univariate Gaussians, and its four partials.
double gaussian_kl(const GaussianParams& q, const GaussianParams& p);
void gaussian_kl_grad(const GaussianParams& q, const GaussianParams& p,
                      double* dq_mean, double* dq_std, double* dp_mean,
                      double* dp_std);

// ---- truncated normal (upper bound) ----------------------------------------

// log density of N(mean, std) truncated to (-inf, ub]; -inf for x > ub.
double truncated_normal_log_pdf(double x, double mean, double std, double ub);
// Partials w.r.t. mean and std (x strictly inside the support).
void truncated_normal_log_pdf_grad(double x, double mean, double std, double ub,
                                   double* dmean, double* dstd);
// Inverse-CDF / tail-rejection sampler for the same distribution.
double truncated_normal_sample(double mean, double std, double ub, RngStream& rng);

} // namespace dbmm
