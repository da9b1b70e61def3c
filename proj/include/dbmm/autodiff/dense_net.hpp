#pragma once

#include <cstdint>
#include <vector>

#include "dbmm/core/rng.hpp"

namespace dbmm {

// Forward-pass record for one DenseNet evaluation: everything backward()
// needs (input and hidden activations), plus the parameter version the
// forward ran against so a stale tape is caught instead of silently
// producing wrong gradients.
struct Tape {
    std::vector<double> x;
    std::vector<double> h;
    uint64_t version = 0;
};

// Fully-connected net with one tanh hidden layer:
//   y = W2 * tanh(W1 x + b1) + b2
//
// Parameters live in a single flat vector laid out [W1 | b1 | W2 | b2]
// (matrices row-major), which keeps the optimizer, gradient clipping and
// serialization trivial. Gradients use the same flat layout.
class DenseNet {
public:
    DenseNet(int in_dim, int hidden_dim, int out_dim); // zero-initialized

    int in_dim() const { return in_; }
    int hidden_dim() const { return hidden_; }
    int out_dim() const { return out_; }
    size_t param_count() const { return params_.size(); }

    // Xavier-uniform initialization of the weights (biases stay zero).
    void init_params(RngStream rng);

    const std::vector<double>& params() const { return params_; }
    // Mutable access bumps the version: any tape recorded before this call
    // becomes unusable for backward().
    std::vector<double>& mutable_params() {
        ++version_;
        return params_;
    }
    uint64_t version() const { return version_; }

    // y must have out_dim() entries; x in_dim(). If tape is non-null it is
    // overwritten with this evaluation's record.
    void forward(const double* x, double* y, Tape* tape = nullptr) const;
    std::vector<double> forward(const std::vector<double>& x, Tape* tape = nullptr) const;

    // Accumulates parameter gradients into `grad` (flat layout, same size as
    // params(); caller zeroes when starting a new accumulation) and, when
    // dx != nullptr, accumulates input gradients into dx[0..in_dim).
    // Throws TapeError if `tape` predates the current parameter version.
    void backward(const Tape& tape, const double* dy, std::vector<double>& grad,
                  double* dx = nullptr) const;

    // Flat-layout offsets, exposed for serialization.
    size_t off_w1() const { return 0; }
    size_t off_b1() const { return static_cast<size_t>(hidden_) * in_; }
    size_t off_w2() const { return off_b1() + hidden_; }
    size_t off_b2() const { return off_w2() + static_cast<size_t>(out_) * hidden_; }

private:
    int in_, hidden_, out_;
    std::vector<double> params_;
    uint64_t version_ = 1;
};

} // namespace dbmm
