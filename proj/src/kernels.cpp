#include "immsbm/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace immsbm::kern {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double mul3_scalar(double s, const double* a, const double* b, double* w,
                   std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = s * a[i] * b[i];
        acc += w[i];
    }
    return acc;
}

double sum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

void add_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

const Kernels* detect() {
    if (const char* env = std::getenv("IMMSBM_KERNEL")) {
#if defined(IMMSBM_HAVE_AVX2_TU)
        if (std::strcmp(env, "avx2") == 0 && __builtin_cpu_supports("avx2"))
            return &avx2_kernels;
#endif
#if defined(IMMSBM_HAVE_NEON_TU)
        if (std::strcmp(env, "neon") == 0) return &neon_kernels;
#endif
        if (std::strcmp(env, "scalar") == 0) return &scalar_kernels;
    }
#if defined(IMMSBM_HAVE_AVX2_TU)
    if (__builtin_cpu_supports("avx2")) return &avx2_kernels;
#endif
#if defined(IMMSBM_HAVE_NEON_TU)
    return &neon_kernels;
#endif
    return &scalar_kernels;
}

const Kernels* g_active = nullptr;

} // namespace

const Kernels scalar_kernels = {dot_scalar, axpy_scalar, mul3_scalar,
                                sum_scalar, add_scalar, "scalar"};

const Kernels& active() {
    if (!g_active) g_active = detect();
    return *g_active;
}

bool select(const std::string& name) {
    if (name.empty()) { // back to auto-detection
        g_active = detect();
        return true;
    }
    if (name == "scalar") {
        g_active = &scalar_kernels;
        return true;
    }
#if defined(IMMSBM_HAVE_AVX2_TU)
    if (name == "avx2" && __builtin_cpu_supports("avx2")) {
        g_active = &avx2_kernels;
        return true;
    }
#endif
#if defined(IMMSBM_HAVE_NEON_TU)
    if (name == "neon") {
        g_active = &neon_kernels;
        return true;
    }
#endif
    return false;
}

} // namespace immsbm::kern
