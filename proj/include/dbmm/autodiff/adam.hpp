#pragma once

#include <cstdint>
#include <vector>

namespace dbmm {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. One instance per parameter block; moments are
// zero-initialized and the step counter starts at 0.
class Adam {
public:
    explicit Adam(size_t n, AdamConfig cfg = {});

    // In-place update of params given grads (both length n). Throws
    // NonFiniteGradient if any gradient entry is NaN/Inf, leaving both the
    // parameters and the moments untouched.
    void step(std::vector<double>& params, const std::vector<double>& grads);

    int64_t t() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    int64_t t_ = 0;
};

} // namespace dbmm
