// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 (and skipped entirely elsewhere); nothing here may
// run unless dispatch confirmed CPU support at startup.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "dbmm/kernels/kernels.hpp"

namespace dbmm::kernels {
namespace {

inline double hsum256(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double dot_row(const double* a, const double* b, size_t n) {
    size_t j = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; j + 8 <= n; j += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + j + 4), _mm256_loadu_pd(b + j + 4), acc1);
    }
    for (; j + 4 <= n; j += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j), acc0);
    }
    double acc = hsum256(_mm256_add_pd(acc0, acc1));
    for (; j < n; ++j) acc += a[j] * b[j];
    return acc;
}

void affine_avx2(const double* W, const double* b, const double* x,
                 double* y, size_t m, size_t n) {
    for (size_t i = 0; i < m; ++i) y[i] = dot_row(W + i * n, x, n) + b[i];
}

void axpy_avx2(double a, const double* x, double* y, size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d vy = _mm256_loadu_pd(y + j);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j), vy);
        _mm256_storeu_pd(y + j, vy);
    }
    for (; j < n; ++j) y[j] += a * x[j];
}

void matvec_t_acc_avx2(const double* W, const double* dz, double* dx,
                       size_t m, size_t n) {
    for (size_t i = 0; i < m; ++i) axpy_avx2(dz[i], W + i * n, dx, n);
}

void outer_acc_avx2(const double* dz, const double* x, double* dW,
                    size_t m, size_t n) {
    for (size_t i = 0; i < m; ++i) axpy_avx2(dz[i], x, dW + i * n, n);
}

double dot_avx2(const double* a, const double* b, size_t n) {
    return dot_row(a, b, n);
}

double sum_avx2(const double* x, size_t n) {
    size_t j = 0;
    __m256d acc = _mm256_setzero_pd();
    for (; j + 4 <= n; j += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + j));
    double s = hsum256(acc);
    for (; j < n; ++j) s += x[j];
    return s;
}

double sumsq_avx2(const double* x, size_t n) {
    size_t j = 0;
    __m256d acc = _mm256_setzero_pd();
    for (; j + 4 <= n; j += 4) {
        const __m256d v = _mm256_loadu_pd(x + j);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double s = hsum256(acc);
    for (; j < n; ++j) s += x[j] * x[j];
    return s;
}

void scale_avx2(double a, double* x, size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(x + j, _mm256_mul_pd(va, _mm256_loadu_pd(x + j)));
    }
    for (; j < n; ++j) x[j] *= a;
}

void adam_avx2(double* p, double* m, double* v, const double* g, size_t n,
               double lr, double b1, double b2, double eps, double c1,
               double c2) {
    const __m256d vb1 = _mm256_set1_pd(b1);
    const __m256d vb2 = _mm256_set1_pd(b2);
    const __m256d v1mb1 = _mm256_set1_pd(1.0 - b1);
    const __m256d v1mb2 = _mm256_set1_pd(1.0 - b2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vc1 = _mm256_set1_pd(c1);
    const __m256d vc2 = _mm256_set1_pd(c2);
    size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d vg = _mm256_loadu_pd(g + j);
        __m256d vm = _mm256_loadu_pd(m + j);
        __m256d vv = _mm256_loadu_pd(v + j);
        vm = _mm256_fmadd_pd(vb1, vm, _mm256_mul_pd(v1mb1, vg));
        vv = _mm256_fmadd_pd(vb2, vv, _mm256_mul_pd(v1mb2, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + j, vm);
        _mm256_storeu_pd(v + j, vv);
        const __m256d denom =
            _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vc2, vv)), veps);
        const __m256d step =
            _mm256_div_pd(_mm256_mul_pd(vlr, _mm256_mul_pd(vc1, vm)), denom);
        _mm256_storeu_pd(p + j, _mm256_sub_pd(_mm256_loadu_pd(p + j), step));
    }
    for (; j < n; ++j) {
        m[j] = b1 * m[j] + (1.0 - b1) * g[j];
        v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
        p[j] -= lr * (c1 * m[j]) / (std::sqrt(c2 * v[j]) + eps);
    }
}

const Ops kAvx2Ops = {
    affine_avx2, matvec_t_acc_avx2, outer_acc_avx2, axpy_avx2, dot_avx2,
    sum_avx2,    sumsq_avx2,        scale_avx2,     adam_avx2, "avx2",
};

} // namespace

const Ops* avx2_ops_or_null() { return &kAvx2Ops; }

} // namespace dbmm::kernels

#else

#include "dbmm/kernels/kernels.hpp"

namespace dbmm::kernels {
const Ops* avx2_ops_or_null() { return nullptr; }
} // namespace dbmm::kernels

#endif
