#include "dbmm/kernels/kernels.hpp"

#include <cmath>

// Reference kernels. Deliberately boring: straight loops, no blocking, no
// tricks. Everything else in the library is defined to agree with these.

namespace dbmm::kernels {
namespace {

void affine_scalar(const double* W, const double* b, const double* x,
                   double* y, size_t m, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        const double* row = W + i * n;
        double acc = 0.0;
        for (size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc + b[i];
    }
}

void matvec_t_acc_scalar(const double* W, const double* dz, double* dx,
                         size_t m, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        const double* row = W + i * n;
        const double z = dz[i];
        for (size_t j = 0; j < n; ++j) dx[j] += row[j] * z;
    }
}

void outer_acc_scalar(const double* dz, const double* x, double* dW,
                      size_t m, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        double* row = dW + i * n;
        const double z = dz[i];
        for (size_t j = 0; j < n; ++j) row[j] += z * x[j];
    }
}

void axpy_scalar(double a, const double* x, double* y, size_t n) {
    for (size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

double dot_scalar(const double* a, const double* b, size_t n) {
    double acc = 0.0;
    for (size_t j = 0; j < n; ++j) acc += a[j] * b[j];
    return acc;
}

double sum_scalar(const double* x, size_t n) {
    double acc = 0.0;
    for (size_t j = 0; j < n; ++j) acc += x[j];
    return acc;
}

double sumsq_scalar(const double* x, size_t n) {
    double acc = 0.0;
    for (size_t j = 0; j < n; ++j) acc += x[j] * x[j];
    return acc;
}

void scale_scalar(double a, double* x, size_t n) {
    for (size_t j = 0; j < n; ++j) x[j] *= a;
}

void adam_scalar(double* p, double* m, double* v, const double* g, size_t n,
                 double lr, double b1, double b2, double eps, double c1,
                 double c2) {
    for (size_t j = 0; j < n; ++j) {
        m[j] = b1 * m[j] + (1.0 - b1) * g[j];
        v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
        p[j] -= lr * (c1 * m[j]) / (std::sqrt(c2 * v[j]) + eps);
    }
}

const Ops kScalarOps = {
    affine_scalar, matvec_t_acc_scalar, outer_acc_scalar, axpy_scalar,
    dot_scalar,    sum_scalar,          sumsq_scalar,     scale_scalar,
    adam_scalar,   "scalar",
};

} // namespace

const Ops& scalar_ops() { return kScalarOps; }

} // namespace dbmm::kernels
