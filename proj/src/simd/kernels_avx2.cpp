// Compiled with -mavx2 only; called only after a runtime CPU check.

#include "mfl/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace mfl::simd {
namespace {

struct Lanes {
    __m256d s = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();
};

inline __m256d abs_pd(__m256d x)
{
    return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

inline void neumaier_add(Lanes& acc, __m256d x)
{
    const __m256d t = _mm256_add_pd(acc.s, x);
    const __m256d s_big = _mm256_cmp_pd(abs_pd(acc.s), abs_pd(x), _CMP_GE_OQ);
    const __m256d when_s = _mm256_add_pd(_mm256_sub_pd(acc.s, t), x);
    const __m256d when_x = _mm256_add_pd(_mm256_sub_pd(x, t), acc.s);
    acc.c = _mm256_add_pd(acc.c, _mm256_blendv_pd(when_x, when_s, s_big));
    acc.s = t;
}

// Scalar tail and final combination, identical to the reference tree.
struct ScalarLane {
    double s;
    double c;

    void add(double x) noexcept
    {
        const double t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
};

double finish(const Lanes& acc, const double* tail, std::size_t tail_n)
{
    alignas(32) double s[4];
    alignas(32) double c[4];
    _mm256_store_pd(s, acc.s);
    _mm256_store_pd(c, acc.c);
    ScalarLane lanes[4];
    for (int l = 0; l < 4; ++l) lanes[l] = {s[l], c[l]};
    for (std::size_t i = 0; i < tail_n; ++i) lanes[i].add(tail[i]);
    ScalarLane total{0.0, 0.0};
    for (const auto& l : lanes) total.add(l.s);
    for (const auto& l : lanes) total.add(l.c);
    return total.s + total.c;
}

inline __m256d int_power_pd(__m256d x, int k)
{
    __m256d r = _mm256_set1_pd(1.0);
    __m256d b = x;
    while (k != 0) {
        if (k & 1) r = _mm256_mul_pd(r, b);
        b = _mm256_mul_pd(b, b);
        k >>= 1;
    }
    return r;
}

inline double int_power(double x, int k)
{
    double r = 1.0;
    double b = x;
    while (k != 0) {
        if (k & 1) r *= b;
        b *= b;
        k >>= 1;
    }
    return r;
}

void abs_increments_avx2(const double* v, std::size_t n, std::size_t lag, double* out)
{
    if (lag >= n) return;
    const std::size_t m = n - lag;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const __m256d a = _mm256_loadu_pd(v + i + lag);
        const __m256d b = _mm256_loadu_pd(v + i);
        _mm256_storeu_pd(out + i, abs_pd(_mm256_sub_pd(a, b)));
    }
    for (; i < m; ++i) out[i] = std::fabs(v[i + lag] - v[i]);
}

double sum_avx2(const double* x, std::size_t n)
{
    Lanes acc;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) neumaier_add(acc, _mm256_loadu_pd(x + i));
    return finish(acc, x + i, n - i);
}

double sum_int_power_avx2(const double* x, std::size_t n, int k)
{
    Lanes acc;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) neumaier_add(acc, int_power_pd(_mm256_loadu_pd(x + i), k));
    double tail[3];
    const std::size_t tail_n = n - i;
    for (std::size_t j = 0; j < tail_n; ++j) tail[j] = int_power(x[i + j], k);
    return finish(acc, tail, tail_n);
}

void euler_maruyama_step_avx2(double* v, const double* dw, std::size_t n, double t0, double dt, double sigma)
{
    const __m256d vt0 = _mm256_set1_pd(t0);
    const __m256d vdt = _mm256_set1_pd(dt);
    const __m256d vsigma = _mm256_set1_pd(sigma);
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(v + i);
        const __m256d drift = _mm256_mul_pd(_mm256_div_pd(_mm256_xor_pd(x, sign), vt0), vdt);
        const __m256d noise = _mm256_mul_pd(_mm256_mul_pd(x, vsigma), _mm256_loadu_pd(dw + i));
        _mm256_storeu_pd(v + i, _mm256_add_pd(_mm256_add_pd(x, drift), noise));
    }
    for (; i < n; ++i) {
        const double x = v[i];
        v[i] = (x + (-x / t0) * dt) + (x * sigma) * dw[i];
    }
}

}  // namespace

const KernelTable& avx2_kernels() noexcept
{
    static const KernelTable table{Isa::avx2, abs_increments_avx2, sum_avx2, sum_int_power_avx2,
                                   euler_maruyama_step_avx2};
    return table;
}

}  // namespace mfl::simd
