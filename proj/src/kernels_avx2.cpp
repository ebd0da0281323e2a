#include "csmarate/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstddef>

// AVX2+FMA variants of the dense kernels.  This translation unit is the only
// one built with -mavx2 -mfma; avx2_backend() verifies CPU support before
// handing out the table, so nothing here runs on unsupported hardware.

namespace csmarate::kernels {

namespace {

double avx2_max_value(const double* v, std::size_t n) {
    std::size_t i = 0;
    double m = v[0];
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(v);
        for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(v + i));
        __m128d lo = _mm256_castpd256_pd128(acc);
        __m128d hi = _mm256_extractf128_pd(acc, 1);
        __m128d mx = _mm_max_pd(lo, hi);
        mx = _mm_max_sd(mx, _mm_unpackhi_pd(mx, mx));
        m = _mm_cvtsd_f64(mx);
    }
    for (; i < n; ++i)
        if (v[i] > m) m = v[i];
    return m;
}

// Cephes-style vectorized exp: n = round(x/ln2), polynomial ratio on the
// reduced argument, 2^n via exponent-bit construction.  Max error ~2 ulp.
// Arguments below -708 flush to zero (softmax contributions that small are
// already invisible at double precision).
__m256d exp4(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);

    const __m256d keep = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_GE_OQ);
    x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
    x = _mm256_min_pd(x, _mm256_set1_pd(709.4));

    __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                 _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(fx, ln2_hi, x);
    x = _mm256_fnmadd_pd(fx, ln2_lo, x);

    const __m256d xx = _mm256_mul_pd(x, x);
    __m256d px = _mm256_set1_pd(1.26177193074810590878e-4);
    px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(3.02994407707441961300e-2));
    px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(9.99999999999999999910e-1));
    px = _mm256_mul_pd(px, x);
    __m256d qx = _mm256_set1_pd(3.00198505138664455042e-6);
    qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.52448340349684104192e-3));
    qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.27265548208155028766e-1));
    qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.00000000000000000005e0));
    __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));

    const __m128i n32 = _mm256_cvtpd_epi32(fx);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
    n64 = _mm256_slli_epi64(n64, 52);
    r = _mm256_mul_pd(r, _mm256_castsi256_pd(n64));
    return _mm256_and_pd(r, keep);
}

double avx2_exp_shift_sum(const double* v, std::size_t n, double shift, double* e) {
    const __m256d sh = _mm256_set1_pd(shift);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d ex = exp4(_mm256_sub_pd(_mm256_loadu_pd(v + i), sh));
        _mm256_storeu_pd(e + i, ex);
        acc = _mm256_add_pd(acc, ex);
    }
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    __m128d s2 = _mm_add_pd(lo, hi);
    double sum = _mm_cvtsd_f64(_mm_add_sd(s2, _mm_unpackhi_pd(s2, s2)));
    for (; i < n; ++i) {
        const double x = v[i] - shift;
        alignas(32) double buf[4] = {x, -1000.0, -1000.0, -1000.0};
        _mm256_store_pd(buf, exp4(_mm256_load_pd(buf)));
        e[i] = buf[0];
        sum += buf[0];
    }
    return sum;
}

void avx2_scale(double* v, std::size_t n, double s) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(v + i, _mm256_mul_pd(_mm256_loadu_pd(v + i), vs));
    for (; i < n; ++i) v[i] *= s;
}

void avx2_masked_marginals(const double* m_rows, const double* tau, std::size_t m,
                           std::size_t nrows, double* y) {
    for (std::size_t l = 0; l < nrows; ++l) {
        const double* row = m_rows + l * m;
        __m256d acc = _mm256_setzero_pd();
        std::size_t k = 0;
        for (; k + 4 <= m; k += 4)
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + k), _mm256_loadu_pd(tau + k), acc);
        __m128d lo = _mm256_castpd256_pd128(acc);
        __m128d hi = _mm256_extractf128_pd(acc, 1);
        __m128d s2 = _mm_add_pd(lo, hi);
        double sum = _mm_cvtsd_f64(_mm_add_sd(s2, _mm_unpackhi_pd(s2, s2)));
        for (; k < m; ++k) sum += row[k] * tau[k];
        y[l] = sum;
    }
}

constexpr Backend kAvx2{"avx2", avx2_max_value, avx2_exp_shift_sum, avx2_scale,
                        avx2_masked_marginals};

} // namespace

const Backend* avx2_backend() {
    static const bool supported =
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &kAvx2 : nullptr;
}

} // namespace csmarate::kernels
