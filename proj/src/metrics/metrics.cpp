#include "dbmm/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbmm/autodiff/heads.hpp"
#include "dbmm/core/errors.hpp"
#include "dbmm/core/special.hpp"

namespace dbmm {

double cross_entropy(const std::vector<CategoricalBelief>& beliefs,
                     const std::vector<int>& states) {
    if (beliefs.size() != states.size())
        throw ShapeError("cross_entropy: beliefs/states length mismatch");
    if (beliefs.empty()) throw EmptyInput("cross_entropy: empty input");
    double total = 0.0;
    for (size_t t = 0; t < beliefs.size(); ++t) {
        const int s = states[t];
        if (s < 0 || size_t(s) >= beliefs[t].size())
            throw IndexError("cross_entropy: state out of range at step " +
                             std::to_string(t));
        total += -std::log(std::max(beliefs[t][s], 1e-12));
    }
    return total / double(beliefs.size());
}

double kl_to_onehot(const std::vector<CategoricalBelief>& beliefs,
                    const std::vector<int>& states) {
    // KL(onehot || b) = -log b[s]: the point mass's entropy term vanishes
    return cross_entropy(beliefs, states);
}

McaResult mca(const std::vector<CategoricalBelief>& beliefs,
              const std::vector<int>& states, int n_classes) {
    if (beliefs.size() != states.size())
        throw ShapeError("mca: beliefs/states length mismatch");
    if (n_classes <= 0) throw ShapeError("mca: n_classes must be positive");
    McaResult res;
    res.count.assign(n_classes, 0);
    std::vector<int64_t> hits(n_classes, 0);
    for (size_t t = 0; t < beliefs.size(); ++t) {
        const int s = states[t];
        if (s < 0 || s >= n_classes)
            throw IndexError("mca: state out of range at step " + std::to_string(t));
        const CategoricalBelief& b = beliefs[t];
        if (b.empty()) throw EmptyInput("mca: empty belief at step " + std::to_string(t));
        size_t best = 0;
        for (size_t c = 1; c < b.size(); ++c)
            if (b[c] > b[best]) best = c; // strict: ties stay at the lowest index
        ++res.count[s];
        if (int(best) == s) ++hits[s];
    }
    res.accuracy.assign(n_classes, std::numeric_limits<double>::quiet_NaN());
    for (int c = 0; c < n_classes; ++c)
        if (res.count[c] > 0)
            res.accuracy[c] = double(hits[c]) / double(res.count[c]);
    return res;
}

double mse(const std::vector<double>& point_estimates,
           const std::vector<double>& states) {
    if (point_estimates.size() != states.size())
        throw ShapeError("mse: length mismatch");
    if (point_estimates.empty()) throw EmptyInput("mse: empty input");
    double total = 0.0;
    for (size_t t = 0; t < states.size(); ++t) {
        const double d = point_estimates[t] - states[t];
        total += d * d;
    }
    return total / double(states.size());
}

double kl_gaussian_sequence(const std::vector<GaussianBelief>& pred,
                            const std::vector<GaussianBelief>& truth) {
    if (pred.size() != truth.size())
        throw ShapeError("kl_gaussian_sequence: length mismatch");
    if (pred.empty()) throw EmptyInput("kl_gaussian_sequence: empty input");
    double total = 0.0;
    for (size_t t = 0; t < pred.size(); ++t)
        total += gaussian_kl(GaussianParams{pred[t].mean, pred[t].std},
                             GaussianParams{truth[t].mean, truth[t].std});
    return total / double(pred.size());
}

ReliabilityCurve reliability_curve(const std::vector<GaussianBelief>& beliefs,
                                   const std::vector<double>& states) {
    if (beliefs.size() != states.size())
        throw ShapeError("reliability_curve: length mismatch");
    if (beliefs.size() < 10)
        throw InsufficientData("reliability_curve: need at least 10 points");
    const size_t n = beliefs.size();
    std::vector<double> u(n);
    for (size_t t = 0; t < n; ++t) {
        const double sd = beliefs[t].std > 0.0 ? beliefs[t].std : 1e-12;
        u[t] = normal_cdf((states[t] - beliefs[t].mean) / sd);
    }
    std::sort(u.begin(), u.end());

    ReliabilityCurve out;
    out.grid.resize(101);
    out.cdf.resize(101);
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        out.grid[i] = x;
        // ECDF: fraction of u <= x
        const size_t k = std::upper_bound(u.begin(), u.end(), x) - u.begin();
        out.cdf[i] = double(k) / double(n);
    }
    // exact KS distance of the sample against Uniform(0,1)
    double ks = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ks = std::max(ks, double(i + 1) / double(n) - u[i]);
        ks = std::max(ks, u[i] - double(i) / double(n));
    }
    out.ks = ks;
    return out;
}

} // namespace dbmm
