#include "pfl/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace pfl::kernels {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double nrm2sq_neon(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vld1q_f64(x + i);
        acc = vfmaq_f64(acc, v, v);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

double diff_nrm2sq_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void mask_mul_neon(const double* x, const std::uint8_t* m, double* out,
                   std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t keep = {m[i] ? ~0ull : 0ull, m[i + 1] ? ~0ull : 0ull};
        const float64x2_t v = vreinterpretq_f64_u64(
            vandq_u64(keep, vreinterpretq_u64_f64(vld1q_f64(x + i))));
        vst1q_f64(out + i, v);
    }
    for (; i < n; ++i) out[i] = m[i] ? x[i] : 0.0;
}

}  // namespace

const Ops& neon_ops() {
    static const Ops table{dot_neon, nrm2sq_neon, diff_nrm2sq_neon, axpy_neon,
                           mask_mul_neon};
    return table;
}

}  // namespace pfl::kernels

#endif
