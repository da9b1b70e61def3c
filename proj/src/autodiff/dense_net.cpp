#include "dbmm/autodiff/dense_net.hpp"

#include <cmath>

#include "dbmm/core/errors.hpp"
#include "dbmm/kernels/kernels.hpp"

namespace dbmm {

DenseNet::DenseNet(int in_dim, int hidden_dim, int out_dim)
    : in_(in_dim), hidden_(hidden_dim), out_(out_dim) {
    if (in_ <= 0 || hidden_ <= 0 || out_ <= 0) {
        throw ShapeError("DenseNet: dimensions must be positive");
    }
    params_.assign(static_cast<size_t>(hidden_) * in_ + hidden_ +
                       static_cast<size_t>(out_) * hidden_ + out_,
                   0.0);
}

void DenseNet::init_params(RngStream rng) {
    auto& p = mutable_params();
    const double s1 = std::sqrt(6.0 / (in_ + hidden_));
    for (size_t k = off_w1(); k < off_b1(); ++k) p[k] = (2.0 * rng.uniform01() - 1.0) * s1;
    const double s2 = std::sqrt(6.0 / (hidden_ + out_));
    for (size_t k = off_w2(); k < off_b2(); ++k) p[k] = (2.0 * rng.uniform01() - 1.0) * s2;
}

void DenseNet::forward(const double* x, double* y, Tape* tape) const {
    const double* W1 = params_.data() + off_w1();
    const double* b1 = params_.data() + off_b1();
    const double* W2 = params_.data() + off_w2();
    const double* b2 = params_.data() + off_b2();

    std::vector<double> hbuf(static_cast<size_t>(hidden_));
    kernels::affine(W1, b1, x, hbuf.data(), hidden_, in_);
    for (auto& h : hbuf) h = std::tanh(h);
    kernels::affine(W2, b2, hbuf.data(), y, out_, hidden_);

    if (tape != nullptr) {
        tape->x.assign(x, x + in_);
        tape->h = std::move(hbuf);
        tape->version = version_;
    }
}

std::vector<double> DenseNet::forward(const std::vector<double>& x, Tape* tape) const {
    if (static_cast<int>(x.size()) != in_) {
        throw ShapeError("DenseNet::forward: input size mismatch");
    }
    std::vector<double> y(static_cast<size_t>(out_));
    forward(x.data(), y.data(), tape);
    return y;
}

void DenseNet::backward(const Tape& tape, const double* dy,
                        std::vector<double>& grad, double* dx) const {
    if (tape.version != version_) {
        throw TapeError("DenseNet::backward: tape is stale (parameters changed "
                        "since the forward pass)");
    }
    if (static_cast<int>(tape.x.size()) != in_ ||
        static_cast<int>(tape.h.size()) != hidden_) {
        throw ShapeError("DenseNet::backward: tape shape mismatch");
    }
    if (grad.size() != params_.size()) {
        throw ShapeError("DenseNet::backward: gradient buffer size mismatch");
    }

    const double* W1 = params_.data() + off_w1();
    const double* W2 = params_.data() + off_w2();
    double* gW1 = grad.data() + off_w1();
    double* gb1 = grad.data() + off_b1();
    double* gW2 = grad.data() + off_w2();
    double* gb2 = grad.data() + off_b2();

    // Output layer.
    kernels::outer_acc(dy, tape.h.data(), gW2, out_, hidden_);
    kernels::axpy(1.0, dy, gb2, out_);

    // Through tanh: dz = (W2^T dy) * (1 - h^2).
    std::vector<double> dz(static_cast<size_t>(hidden_), 0.0);
    kernels::matvec_t_acc(W2, dy, dz.data(), out_, hidden_);
    for (int j = 0; j < hidden_; ++j) {
        dz[static_cast<size_t>(j)] *= 1.0 - tape.h[static_cast<size_t>(j)] *
                                                tape.h[static_cast<size_t>(j)];
    }

    // Input layer.
    kernels::outer_acc(dz.data(), tape.x.data(), gW1, hidden_, in_);
    kernels::axpy(1.0, dz.data(), gb1, hidden_);
    if (dx != nullptr) {
        kernels::matvec_t_acc(W1, dz.data(), dx, hidden_, in_);
    }
}

} // namespace dbmm
