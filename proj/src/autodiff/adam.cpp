#include "dbmm/autodiff/adam.hpp"

#include <cmath>

#include "dbmm/core/errors.hpp"
#include "dbmm/kernels/kernels.hpp"

namespace dbmm {

Adam::Adam(size_t n, AdamConfig cfg)
    : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ShapeError("Adam::step: size mismatch");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) {
            throw NonFiniteGradient("Adam::step: non-finite gradient entry");
        }
    }
    ++t_;
    const double c1 = 1.0 / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    const double c2 = 1.0 / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
    kernels::adam_update(params.data(), m_.data(), v_.data(), grads.data(),
                         params.size(), cfg_.lr, cfg_.beta1, cfg_.beta2,
                         cfg_.eps, c1, c2);
}

} // namespace dbmm
