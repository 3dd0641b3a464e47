#include "rareis/kernels.hpp"

#include <atomic>
#include <cmath>
#include <limits>

namespace rareis::num {

namespace {
std::atomic<KernelBackend> g_backend{KernelBackend::automatic};
}

void set_kernel_backend(KernelBackend backend) { g_backend.store(backend); }

KernelBackend kernel_backend() { return g_backend.load(); }

bool kernel_simd_available() {
#if defined(__x86_64__) || defined(_M_X64)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#elif defined(__aarch64__)
    return true;
#else
    return false;
#endif
}

const char* kernel_backend_name() {
    const KernelBackend b = g_backend.load();
    if (b == KernelBackend::scalar) return "scalar";
    if (b == KernelBackend::simd || kernel_simd_available()) {
#if defined(__x86_64__) || defined(_M_X64)
        return "avx2";
#elif defined(__aarch64__)
        return "neon";
#else
        return "scalar";
#endif
    }
    return "scalar";
}

MomentSums twisted_moments_scalar(const double* a, const double* l, std::size_t n, double mu) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        if (a[j] != 0.0) {
            const double z = mu * l[j];
            if (z > zmax) zmax = z;
        }
    }
    if (zmax == -std::numeric_limits<double>::infinity()) return {};

    double s0 = 0.0, s1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (a[j] == 0.0) continue;
        // explicit fma pins one-rounding shifted arguments so the simd
        // variants can reproduce them regardless of contraction flags
        const double e = std::exp(std::fma(mu, l[j], -zmax));
        s0 += a[j] * e;
        s1 += a[j] * l[j] * e;
    }
    return {zmax, s0, s1};
}

#if !(defined(__x86_64__) || defined(_M_X64) || defined(__aarch64__))
MomentSums twisted_moments_simd(const double* a, const double* l, std::size_t n, double mu) {
    return twisted_moments_scalar(a, l, n, mu);
}
#endif

MomentSums twisted_moments(const double* a, const double* l, std::size_t n, double mu) {
    switch (g_backend.load()) {
        case KernelBackend::scalar:
            return twisted_moments_scalar(a, l, n, mu);
        case KernelBackend::simd:
            return twisted_moments_simd(a, l, n, mu);
        case KernelBackend::automatic:
            break;
    }
    if (kernel_simd_available()) return twisted_moments_simd(a, l, n, mu);
    return twisted_moments_scalar(a, l, n, mu);
}

}  // namespace rareis::num
