#include "dbmm/enkf/kalman.hpp"

#include <cmath>

#include "dbmm/core/errors.hpp"

namespace dbmm {

void LinearGaussianSpec::validate() const {
    if (!(q > 0.0) || !(r > 0.0) || !(initial_std > 0.0))
        throw ConfigError("linear_gaussian", "q, r and initial_std must be positive");
    if (!std::isfinite(a) || !std::isfinite(h) || !std::isfinite(initial_mean))
        throw ConfigError("linear_gaussian", "coefficients must be finite");
}

std::vector<GaussianBelief> kalman_filter(const LinearGaussianSpec& spec,
                                          const std::vector<double>& observations) {
    spec.validate();
    std::vector<GaussianBelief> out;
    out.reserve(observations.size());
    double m = spec.initial_mean;
    double P = spec.initial_std * spec.initial_std;
    bool first = true;
    for (double o : observations) {
        if (!first) {
            m = spec.a * m;
            P = spec.a * spec.a * P + spec.q * spec.q;
        }
        first = false;
        const double S = spec.h * spec.h * P + spec.r * spec.r;
        const double K = P * spec.h / S;
        m += K * (o - spec.h * m);
        P *= 1.0 - K * spec.h;
        out.push_back(GaussianBelief{m, std::sqrt(P)});
    }
    return out;
}

} // namespace dbmm
