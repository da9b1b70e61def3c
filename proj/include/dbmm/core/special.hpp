#pragma once

namespace dbmm {

// Standard normal density, CDF, and friends. All of these keep good
// *relative* accuracy deep into the lower tail, which the truncated
// distributions and the inverse-CDF sampler depend on.
double normal_pdf(double z);
double normal_log_pdf(double z);
double normal_cdf(double z);

// log(Phi(z)); asymptotic expansion below z ~ -36 where Phi underflows.
double log_normal_cdf(double z);

// Hazard ratio phi(z)/Phi(z); stable for very negative z where both the
// numerator and denominator underflow.
double normal_hazard(double z);

// Quantile of the standard normal, p in (0, 1). Accurate to ~1e-13 relative
// across the full range including extreme tails (p = 1e-300 is fine).
double inverse_normal_cdf(double p);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double betainc(double a, double b, double x);
// log I_x(a, b); keeps relative accuracy when I_x underflows (small x).
double log_betainc(double a, double b, double x);

// Student's t with nu degrees of freedom (location 0, scale 1).
double student_t_log_pdf(double t, double nu);
double student_t_cdf(double t, double nu);
double log_student_t_cdf(double t, double nu);
// Quantile: safeguarded Newton on the CDF, p in (0, 1).
double student_t_quantile(double p, double nu);

} // namespace dbmm
