// NEON variant of the twisted moment kernel (aarch64 baseline, no extra flags).
#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstddef>
#include <limits>

#include "rareis/kernels.hpp"

namespace rareis::num {

namespace {

constexpr double kInvLn2 = 1.4426950408889634;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

// Mirrors the AVX2 implementation: degree-12 Taylor after range reduction,
// two-step 2^n scaling. Arguments are <= 0 by construction.
inline float64x2_t exp_nonpos(float64x2_t z) {
    // Same guard as the AVX2 path: below -746 the result is zero and the
    // exponent split cannot encode n, so clamp and mask.
    const float64x2_t vcut = vdupq_n_f64(-746.0);
    const uint64x2_t live = vcgtq_f64(z, vcut);
    z = vmaxq_f64(z, vcut);

    const int64x2_t n64 = vcvtnq_s64_f64(vmulq_f64(z, vdupq_n_f64(kInvLn2)));
    const float64x2_t nd = vcvtq_f64_s64(n64);

    float64x2_t r = vfmsq_f64(z, nd, vdupq_n_f64(kLn2Hi));
    r = vfmsq_f64(r, nd, vdupq_n_f64(kLn2Lo));

    float64x2_t p = vdupq_n_f64(2.0876756987868099e-09);
    p = vfmaq_f64(vdupq_n_f64(2.5052108385441720e-08), p, r);
    p = vfmaq_f64(vdupq_n_f64(2.7557319223985888e-07), p, r);
    p = vfmaq_f64(vdupq_n_f64(2.7557319223985893e-06), p, r);
    p = vfmaq_f64(vdupq_n_f64(2.4801587301587302e-05), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.9841269841269841e-04), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.3888888888888889e-03), p, r);
    p = vfmaq_f64(vdupq_n_f64(8.3333333333333332e-03), p, r);
    p = vfmaq_f64(vdupq_n_f64(4.1666666666666664e-02), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.6666666666666666e-01), p, r);
    p = vfmaq_f64(vdupq_n_f64(0.5), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0), p, r);

    const int64x2_t m1 = vshrq_n_s64(n64, 1);
    const int64x2_t m2 = vsubq_s64(n64, m1);
    const int64x2_t bias = vdupq_n_s64(1023);
    const float64x2_t f1 = vreinterpretq_f64_s64(vshlq_n_s64(vaddq_s64(m1, bias), 52));
    const float64x2_t f2 = vreinterpretq_f64_s64(vshlq_n_s64(vaddq_s64(m2, bias), 52));
    const float64x2_t out = vmulq_f64(vmulq_f64(p, f1), f2);
    return vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(out), live));
}

}  // namespace

MomentSums twisted_moments_simd(const double* a, const double* l, std::size_t n, double mu) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    const float64x2_t vmu = vdupq_n_f64(mu);
    const float64x2_t vzero = vdupq_n_f64(0.0);
    const float64x2_t vninf = vdupq_n_f64(neg_inf);

    float64x2_t vmax = vninf;
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        const float64x2_t va = vld1q_f64(a + j);
        const float64x2_t vz = vmulq_f64(vmu, vld1q_f64(l + j));
        const uint64x2_t inactive = vceqzq_f64(va);
        vmax = vmaxq_f64(vmax, vbslq_f64(inactive, vninf, vz));
    }
    double zmax = vmaxvq_f64(vmax);
    for (; j < n; ++j)
        if (a[j] != 0.0) zmax = std::max(zmax, mu * l[j]);
    if (zmax == neg_inf) return {};

    const float64x2_t vnshift = vdupq_n_f64(-zmax);
    float64x2_t vs0 = vzero, vs1 = vzero;
    for (j = 0; j + 2 <= n; j += 2) {
        const float64x2_t va = vld1q_f64(a + j);
        const float64x2_t vl = vld1q_f64(l + j);
        const uint64x2_t inactive = vceqzq_f64(va);
        // single-rounding mu*l - zmax, matching the scalar kernel's fma;
        // inactive-lane garbage is discarded by the select below
        const float64x2_t ve = vbslq_f64(inactive, vzero, exp_nonpos(vfmaq_f64(vnshift, vmu, vl)));
        const float64x2_t vae = vmulq_f64(va, ve);
        vs0 = vaddq_f64(vs0, vae);
        vs1 = vfmaq_f64(vs1, vae, vl);
    }
    double s0 = vaddvq_f64(vs0);
    double s1 = vaddvq_f64(vs1);
    for (; j < n; ++j) {
        if (a[j] == 0.0) continue;
        const double e = std::exp(std::fma(mu, l[j], -zmax));
        s0 += a[j] * e;
        s1 += a[j] * l[j] * e;
    }
    return {zmax, s0, s1};
}

}  // namespace rareis::num

#endif  // __aarch64__
