#include "immsbm/kernels.hpp"

#include <arm_neon.h>

// NEON variants (aarch64 baseline, 2 doubles per lane).

namespace immsbm::kern {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vaddq_f64(vy, vmulq_f64(va, vld1q_f64(x + i)));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double mul3_neon(double s, const double* a, const double* b, double* w,
                 std::size_t n) {
    float64x2_t vs = vdupq_n_f64(s);
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vw =
            vmulq_f64(vmulq_f64(vs, vld1q_f64(a + i)), vld1q_f64(b + i));
        vst1q_f64(w + i, vw);
        acc = vaddq_f64(acc, vw);
    }
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) {
        w[i] = s * a[i] * b[i];
        r += w[i];
    }
    return r;
}

double sum_neon(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += a[i];
    return r;
}

void add_neon(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

} // namespace

const Kernels neon_kernels = {dot_neon, axpy_neon, mul3_neon,
                              sum_neon, add_neon, "neon"};

} // namespace immsbm::kern
