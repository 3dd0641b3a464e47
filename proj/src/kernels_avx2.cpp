// AVX2/FMA variant of the twisted moment kernel. Compiled with -mavx2 -mfma;
// callers must gate on kernel_simd_available().
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <limits>

#include "rareis/kernels.hpp"

namespace rareis::num {

namespace {

constexpr double kInvLn2 = 1.4426950408889634;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

// exp(z) for max-shifted arguments: z <= 0 up to the half-ulp residue the
// fma shift can leave on the max lane. Degree-12 Taylor on [-ln2/2, ln2/2]
// after range reduction, then a two-step 2^n scale so subnormal results
// survive without special casing. Large positive z (masked-off lanes) wraps
// the scale and returns garbage; callers must zero those lanes.
inline __m256d exp_nonpos(__m256d z) {
    // exp underflows to zero a little past -745; clamp so the exponent
    // split below never sees an n it cannot encode, and zero those lanes
    // at the end. Without this the shift wraps for z < -1418 and emits
    // garbage of either sign.
    const __m256d vcut = _mm256_set1_pd(-746.0);
    const __m256d live = _mm256_cmp_pd(z, vcut, _CMP_GT_OQ);
    z = _mm256_max_pd(z, vcut);

    const __m256d vinvln2 = _mm256_set1_pd(kInvLn2);
    const __m128i n32 = _mm256_cvtpd_epi32(_mm256_mul_pd(z, vinvln2));
    const __m256d nd = _mm256_cvtepi32_pd(n32);

    __m256d r = _mm256_fnmadd_pd(nd, _mm256_set1_pd(kLn2Hi), z);
    r = _mm256_fnmadd_pd(nd, _mm256_set1_pd(kLn2Lo), r);

    __m256d p = _mm256_set1_pd(2.0876756987868099e-09);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.5052108385441720e-08));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985888e-07));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985893e-06));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.4801587301587302e-05));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.9841269841269841e-04));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.3888888888888889e-03));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.3333333333333332e-03));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666664e-02));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666666e-01));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    // 2^n = 2^m1 * 2^m2 with m1 = n>>1, m2 = n - m1; both factors stay normal
    // for n down to -1076.
    const __m128i m1_32 = _mm_srai_epi32(n32, 1);
    const __m128i m2_32 = _mm_sub_epi32(n32, m1_32);
    const __m256i bias = _mm256_set1_epi64x(1023);
    const __m256i e1 = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(m1_32), bias), 52);
    const __m256i e2 = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(m2_32), bias), 52);
    p = _mm256_mul_pd(p, _mm256_castsi256_pd(e1));
    return _mm256_and_pd(_mm256_mul_pd(p, _mm256_castsi256_pd(e2)), live);
}

inline double reduce_max(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d m = _mm_max_pd(lo, hi);
    return std::max(_mm_cvtsd_f64(m), _mm_cvtsd_f64(_mm_unpackhi_pd(m, m)));
}

inline double reduce_add(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

}  // namespace

MomentSums twisted_moments_simd(const double* a, const double* l, std::size_t n, double mu) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    const __m256d vmu = _mm256_set1_pd(mu);
    const __m256d vzero = _mm256_setzero_pd();
    const __m256d vninf = _mm256_set1_pd(neg_inf);

    __m256d vmax = vninf;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d va = _mm256_loadu_pd(a + j);
        const __m256d vz = _mm256_mul_pd(vmu, _mm256_loadu_pd(l + j));
        const __m256d active = _mm256_cmp_pd(va, vzero, _CMP_NEQ_OQ);
        vmax = _mm256_max_pd(vmax, _mm256_blendv_pd(vninf, vz, active));
    }
    double zmax = reduce_max(vmax);
    for (; j < n; ++j)
        if (a[j] != 0.0) zmax = std::max(zmax, mu * l[j]);
    if (zmax == neg_inf) return {};

    const __m256d vshift = _mm256_set1_pd(zmax);
    __m256d vs0 = vzero, vs1 = vzero;
    for (j = 0; j + 4 <= n; j += 4) {
        const __m256d va = _mm256_loadu_pd(a + j);
        const __m256d vl = _mm256_loadu_pd(l + j);
        const __m256d active = _mm256_cmp_pd(va, vzero, _CMP_NEQ_OQ);
        // Single-rounding argument, same as the scalar kernel's fma. Inactive
        // lanes can carry arbitrary positive args; whatever exp_nonpos makes
        // of those is wiped by the mask.
        const __m256d arg = _mm256_fmsub_pd(vmu, vl, vshift);
        const __m256d ve = _mm256_and_pd(exp_nonpos(arg), active);
        const __m256d vae = _mm256_mul_pd(va, ve);
        vs0 = _mm256_add_pd(vs0, vae);
        vs1 = _mm256_fmadd_pd(vae, vl, vs1);
    }
    double s0 = reduce_add(vs0);
    double s1 = reduce_add(vs1);
    for (; j < n; ++j) {
        if (a[j] == 0.0) continue;
        const double e = std::exp(std::fma(mu, l[j], -zmax));
        s0 += a[j] * e;
        s1 += a[j] * l[j] * e;
    }
    return {zmax, s0, s1};
}

}  // namespace rareis::num

#endif  // x86_64
