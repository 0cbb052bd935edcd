#pragma once

#include <cstddef>
#include <string>

// Scalar reference kernels for the dense inner loops, plus SIMD variants
// selected at runtime. All lengths are in doubles; no alignment requirement.

namespace immsbm::kern {

struct Kernels {
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // w[i] = s * a[i] * b[i]; returns sum_i w[i]
    double (*mul3)(double s, const double* a, const double* b, double* w,
                   std::size_t n);
    // sum_i a[i]
    double (*sum)(const double* a, std::size_t n);
    // y[i] += x[i]
    void (*add)(const double* x, double* y, std::size_t n);
    const char* name;
};

extern const Kernels scalar_kernels;
#if defined(IMMSBM_HAVE_AVX2_TU)
extern const Kernels avx2_kernels;
#endif
#if defined(IMMSBM_HAVE_NEON_TU)
extern const Kernels neon_kernels;
#endif

// Best variant the CPU supports, overridable via IMMSBM_KERNEL=scalar|avx2|neon.
const Kernels& active();
// Force a variant by name ("" re-runs auto-detection); returns false if the
// variant is unavailable on this build/CPU.
bool select(const std::string& name);

} // namespace immsbm::kern
