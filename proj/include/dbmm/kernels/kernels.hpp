#pragma once

#include <cstddef>

// Hot inner loops of the library, factored behind a function table so the
// same code paths can run on plain scalar arithmetic or on SIMD units.
//
// Layout conventions: matrices are row-major, W is m rows by n cols.
// All "acc" kernels accumulate into their output (+=), callers zero first.
//
// Backend selection happens once, at first use:
//   - x86-64: AVX2+FMA when the CPU reports both, otherwise scalar
//   - aarch64: NEON (always present), otherwise scalar
//   - the DBMM_KERNEL_BACKEND environment variable ("scalar", "avx2",
//     "neon") overrides autodetection; asking for an unavailable backend
//     falls back to scalar.
//
// Numerical note: SIMD variants use lane-parallel accumulators and FMA, so
// results can differ from scalar in the last bits. Every kernel has the
// scalar implementation as its reference semantics; the equivalence test
// suite pins the variants to it within tight relative tolerance. Within a
// fixed backend results are bit-reproducible.

namespace dbmm::kernels {

struct Ops {
    // y = W x + b
    void (*affine)(const double* W, const double* b, const double* x,
                   double* y, size_t m, size_t n);
    // dx += W^T dz
    void (*matvec_t_acc)(const double* W, const double* dz, double* dx,
                         size_t m, size_t n);
    // dW += dz (outer) x
    void (*outer_acc)(const double* dz, const double* x, double* dW,
                      size_t m, size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, size_t n);
    double (*dot)(const double* a, const double* b, size_t n);
    double (*sum)(const double* x, size_t n);
    double (*sumsq)(const double* x, size_t n);
    void (*scale)(double a, double* x, size_t n);
    // Adam step with precomputed bias corrections c1 = 1/(1-b1^t),
    // c2 = 1/(1-b2^t):
    //   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
    //   p <- p - lr * (c1 m) / (sqrt(c2 v) + eps)
    void (*adam_update)(double* p, double* m, double* v, const double* g,
                        size_t n, double lr, double b1, double b2, double eps,
                        double c1, double c2);
    const char* name;
};

// Active backend (autodetected / env-overridden, resolved once).
const Ops& ops();
// Reference implementation, always available regardless of dispatch.
const Ops& scalar_ops();
// Name of the active backend: "scalar", "avx2" or "neon".
const char* backend_name();

// Populated by the per-arch translation units; null when not compiled in.
const Ops* avx2_ops_or_null();
const Ops* neon_ops_or_null();

// Convenience wrappers through the active backend.
inline void affine(const double* W, const double* b, const double* x,
                   double* y, size_t m, size_t n) {
    ops().affine(W, b, x, y, m, n);
}
inline void matvec_t_acc(const double* W, const double* dz, double* dx,
                         size_t m, size_t n) {
    ops().matvec_t_acc(W, dz, dx, m, n);
}
inline void outer_acc(const double* dz, const double* x, double* dW,
                      size_t m, size_t n) {
    ops().outer_acc(dz, x, dW, m, n);
}
inline void axpy(double a, const double* x, double* y, size_t n) {
    ops().axpy(a, x, y, n);
}
inline double dot(const double* a, const double* b, size_t n) {
    return ops().dot(a, b, n);
}
inline double sum(const double* x, size_t n) { return ops().sum(x, n); }
inline double sumsq(const double* x, size_t n) { return ops().sumsq(x, n); }
inline void scale(double a, double* x, size_t n) { ops().scale(a, x, n); }
inline void adam_update(double* p, double* m, double* v, const double* g,
                        size_t n, double lr, double b1, double b2, double eps,
                        double c1, double c2) {
    ops().adam_update(p, m, v, g, n, lr, b1, b2, eps, c1, c2);
}

} // namespace dbmm::kernels
