// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "skipscope/simd.hpp"

#include <immintrin.h>

namespace skipscope::simd::avx2 {

namespace {

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

} // namespace

CosineTerms cosine_terms(std::span<const float> x, std::span<const float> y)
{
    const std::size_t n = x.size();
    const float* a = x.data();
    const float* b = y.data();

    __m256d dot0 = _mm256_setzero_pd(), dot1 = _mm256_setzero_pd();
    __m256d xx0 = _mm256_setzero_pd(), xx1 = _mm256_setzero_pd();
    __m256d yy0 = _mm256_setzero_pd(), yy1 = _mm256_setzero_pd();

    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        const __m256 vb = _mm256_loadu_ps(b + i);
        const __m256d a0 = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
        const __m256d a1 = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
        const __m256d b0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
        const __m256d b1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
        dot0 = _mm256_fmadd_pd(a0, b0, dot0);
        dot1 = _mm256_fmadd_pd(a1, b1, dot1);
        xx0 = _mm256_fmadd_pd(a0, a0, xx0);
        xx1 = _mm256_fmadd_pd(a1, a1, xx1);
        yy0 = _mm256_fmadd_pd(b0, b0, yy0);
        yy1 = _mm256_fmadd_pd(b1, b1, yy1);
    }

    CosineTerms acc;
    acc.dot = hsum(_mm256_add_pd(dot0, dot1));
    acc.xx = hsum(_mm256_add_pd(xx0, xx1));
    acc.yy = hsum(_mm256_add_pd(yy0, yy1));
    for (; i < n; ++i) {
        const double p = a[i];
        const double q = b[i];
        acc.dot += p * q;
        acc.xx += p * p;
        acc.yy += q * q;
    }
    return acc;
}

double dot(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    const double* a = x.data();
    const double* b = y.data();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double res = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        res += a[i] * b[i];
    }
    return res;
}

double squared_distance(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    const double* a = x.data();
    const double* b = y.data();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double res = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        res += d * d;
    }
    return res;
}

void matvec(std::span<const double> matrix, std::span<const double> x, std::span<double> out)
{
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < out.size(); ++r) {
        out[r] = dot(matrix.subspan(r * cols, cols), x);
    }
}

} // namespace skipscope::simd::avx2
