#include "pfl/kernels.hpp"

namespace pfl::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double nrm2sq_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double diff_nrm2sq_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void mask_mul_scalar(const double* x, const std::uint8_t* m, double* out,
                     std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = m[i] ? x[i] : 0.0;
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops table{dot_scalar, nrm2sq_scalar, diff_nrm2sq_scalar,
                           axpy_scalar, mask_mul_scalar};
    return table;
}

}  // namespace pfl::kernels
