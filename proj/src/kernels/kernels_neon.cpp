// NEON kernel variants for aarch64 (float64x2 lanes). Mirrors the AVX2
// translation unit; compiles to a null provider on other architectures.

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>

#include "dbmm/kernels/kernels.hpp"

namespace dbmm::kernels {
namespace {

inline double dot_row(const double* a, const double* b, size_t n) {
    size_t j = 0;
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    for (; j + 4 <= n; j += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + j), vld1q_f64(b + j));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + j + 2), vld1q_f64(b + j + 2));
    }
    for (; j + 2 <= n; j += 2) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + j), vld1q_f64(b + j));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; j < n; ++j) acc += a[j] * b[j];
    return acc;
}

void affine_neon(const double* W, const double* b, const double* x,
                 double* y, size_t m, size_t n) {
    for (size_t i = 0; i < m; ++i) y[i] = dot_row(W + i * n, x, n) + b[i];
}

void axpy_neon(double a, const double* x, double* y, size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        float64x2_t vy = vld1q_f64(y + j);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + j));
        vst1q_f64(y + j, vy);
    }
    for (; j < n; ++j) y[j] += a * x[j];
}

void matvec_t_acc_neon(const double* W, const double* dz, double* dx,
                       size_t m, size_t n) {
    for (size_t i = 0; i < m; ++i) axpy_neon(dz[i], W + i * n, dx, n);
}

void outer_acc_neon(const double* dz, const double* x, double* dW,
                    size_t m, size_t n) {
    for (size_t i = 0; i < m; ++i) axpy_neon(dz[i], x, dW + i * n, n);
}

double dot_neon(const double* a, const double* b, size_t n) {
    return dot_row(a, b, n);
}

double sum_neon(const double* x, size_t n) {
    size_t j = 0;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (; j + 2 <= n; j += 2) acc = vaddq_f64(acc, vld1q_f64(x + j));
    double s = vaddvq_f64(acc);
    for (; j < n; ++j) s += x[j];
    return s;
}

double sumsq_neon(const double* x, size_t n) {
    size_t j = 0;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (; j + 2 <= n; j += 2) {
        const float64x2_t v = vld1q_f64(x + j);
        acc = vfmaq_f64(acc, v, v);
    }
    double s = vaddvq_f64(acc);
    for (; j < n; ++j) s += x[j] * x[j];
    return s;
}

void scale_neon(double a, double* x, size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        vst1q_f64(x + j, vmulq_f64(va, vld1q_f64(x + j)));
    }
    for (; j < n; ++j) x[j] *= a;
}

void adam_neon(double* p, double* m, double* v, const double* g, size_t n,
               double lr, double b1, double b2, double eps, double c1,
               double c2) {
    const float64x2_t vb1 = vdupq_n_f64(b1);
    const float64x2_t vb2 = vdupq_n_f64(b2);
    const float64x2_t v1mb1 = vdupq_n_f64(1.0 - b1);
    const float64x2_t v1mb2 = vdupq_n_f64(1.0 - b2);
    const float64x2_t vlr = vdupq_n_f64(lr);
    const float64x2_t veps = vdupq_n_f64(eps);
    const float64x2_t vc1 = vdupq_n_f64(c1);
    const float64x2_t vc2 = vdupq_n_f64(c2);
    size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        const float64x2_t vg = vld1q_f64(g + j);
        float64x2_t vm = vld1q_f64(m + j);
        float64x2_t vv = vld1q_f64(v + j);
        vm = vfmaq_f64(vmulq_f64(v1mb1, vg), vb1, vm);
        vv = vfmaq_f64(vmulq_f64(v1mb2, vmulq_f64(vg, vg)), vb2, vv);
        vst1q_f64(m + j, vm);
        vst1q_f64(v + j, vv);
        const float64x2_t denom =
            vaddq_f64(vsqrtq_f64(vmulq_f64(vc2, vv)), veps);
        const float64x2_t step =
            vdivq_f64(vmulq_f64(vlr, vmulq_f64(vc1, vm)), denom);
        vst1q_f64(p + j, vsubq_f64(vld1q_f64(p + j), step));
    }
    for (; j < n; ++j) {
        m[j] = b1 * m[j] + (1.0 - b1) * g[j];
        v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
        p[j] -= lr * (c1 * m[j]) / (std::sqrt(c2 * v[j]) + eps);
    }
}

const Ops kNeonOps = {
    affine_neon, matvec_t_acc_neon, outer_acc_neon, axpy_neon, dot_neon,
    sum_neon,    sumsq_neon,        scale_neon,     adam_neon, "neon",
};

} // namespace

const Ops* neon_ops_or_null() { return &kNeonOps; }

} // namespace dbmm::kernels

#else

#include "dbmm/kernels/kernels.hpp"

namespace dbmm::kernels {
const Ops* neon_ops_or_null() { return nullptr; }
} // namespace dbmm::kernels

#endif
