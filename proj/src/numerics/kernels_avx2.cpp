// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// is only reached after a CPUID check in dispatch.cpp.

#include "kernel_tables.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace tiam::kernels::detail {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// row[0..n) += s * src[0..n)
inline void axpy_row(std::size_t n, double s, const double* src, double* row) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256d r0 = _mm256_loadu_pd(row + j);
        __m256d r1 = _mm256_loadu_pd(row + j + 4);
        r0 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(src + j), r0);
        r1 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(src + j + 4), r1);
        _mm256_storeu_pd(row + j, r0);
        _mm256_storeu_pd(row + j + 4, r1);
    }
    for (; j + 4 <= n; j += 4) {
        __m256d r = _mm256_loadu_pd(row + j);
        r = _mm256_fmadd_pd(vs, _mm256_loadu_pd(src + j), r);
        _mm256_storeu_pd(row + j, r);
    }
    for (; j < n; ++j) row[j] = std::fma(s, src[j], row[j]);
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            if (aip == 0.0) continue;
            axpy_row(n, aip, b + p * n, crow);
        }
    }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double api = arow[i];
            if (api == 0.0) continue;
            axpy_row(n, api, brow, c + i * n);
        }
    }
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s = std::fma(x[i], y[i], s);
    return s;
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, b + j * k, k);
}

double sum_sq(const double* x, std::size_t n) { return dot(x, x, n); }

void axpby(std::size_t n, double alpha, const double* x, double beta, const double* y,
           double* out) {
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vb = _mm256_set1_pd(beta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy));
    }
    for (; i < n; ++i) out[i] = std::fma(alpha, x[i], beta * y[i]);
}

void clip(std::size_t n, const double* x, const double* lo, const double* hi, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_max_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(lo + i));
        v = _mm256_min_pd(v, _mm256_loadu_pd(hi + i));
        _mm256_storeu_pd(out + i, v);
    }
    for (; i < n; ++i) out[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

}  // namespace

const KernelTable kAvx2Table{
    Isa::Avx2, "avx2", &gemm_nn, &gemm_tn, &gemm_nt, &dot, &sum_sq, &axpby, &clip,
};

}  // namespace tiam::kernels::detail
