#pragma once

#include <cstddef>

namespace rareis::num {

// Shifted exponential moment sums over quadrature nodes:
//   zmax = max_{j: a_j != 0} mu*l_j
//   s0   = sum_j a_j * exp(mu*l_j - zmax)
//   s1   = sum_j a_j * l_j * exp(mu*l_j - zmax)
// Nodes with a_j = 0 are excluded from the max so a vanished continuation
// cannot drag every other term to underflow. All zeros when every a_j = 0.
struct MomentSums {
    double zmax = 0.0;
    double s0 = 0.0;
    double s1 = 0.0;
};

enum class KernelBackend { automatic, scalar, simd };

// Backend selection for the moment kernel; `automatic` picks SIMD when the
// CPU supports it. Thread-safe; intended for tests and diagnostics.
void set_kernel_backend(KernelBackend backend);
KernelBackend kernel_backend();
const char* kernel_backend_name();
bool kernel_simd_available();

MomentSums twisted_moments_scalar(const double* a, const double* l, std::size_t n, double mu);
MomentSums twisted_moments_simd(const double* a, const double* l, std::size_t n, double mu);

// Dispatched entry point used by the solver.
MomentSums twisted_moments(const double* a, const double* l, std::size_t n, double mu);

}  // namespace rareis::num
