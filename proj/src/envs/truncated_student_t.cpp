#include "dbmm/envs/truncated_student_t.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbmm/core/errors.hpp"
#include "dbmm/core/special.hpp"

namespace dbmm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_params(double sigma, double nu) {
    if (!(sigma > 0.0)) throw IndexError("truncated student-t: sigma must be > 0");
    if (!(nu > 0.0)) throw IndexError("truncated student-t: nu must be > 0");
}
} // namespace

double ts_sample(double mu, double sigma, double nu, double ub, RngStream& rng) {
    check_params(sigma, nu);
    if (ub == kInf) {
        return mu + sigma * student_t_quantile(rng.uniform01(), nu);
    }
    const double alpha = (ub - mu) / sigma;
    const double mass = student_t_cdf(alpha, nu);
    if (mass >= 1e-6) {
        const double u = rng.uniform01() * mass; // u in (0, mass)
        return std::min(mu + sigma * student_t_quantile(u, nu), ub);
    }
    // Extreme truncation: rejection from the untruncated law, bounded so a
    // vanishing acceptance region cannot stall the simulation.
    for (int attempt = 0; attempt < 2000; ++attempt) {
        const double x = mu + sigma * student_t_quantile(rng.uniform01(), nu);
        if (x <= ub) return x;
    }
    const double u = rng.uniform01() * mass;
    return std::min(mu + sigma * student_t_quantile(u, nu), ub);
}

double ts_log_pdf(double x, double mu, double sigma, double nu, double ub) {
    check_params(sigma, nu);
    if (x > ub) return -kInf;
    const double t = (x - mu) / sigma;
    double lp = student_t_log_pdf(t, nu) - std::log(sigma);
    if (std::isfinite(ub)) {
        lp -= log_student_t_cdf((ub - mu) / sigma, nu);
    }
    return lp;
}

} // namespace dbmm
