// Built with -mavx2 -mfma. Only reached after a runtime CPU check.

#include <immintrin.h>

#include "pmilab/kernels.hpp"

namespace pmilab::kernels::avx2 {

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        __m256d y0 = _mm256_loadu_pd(y + k);
        __m256d y1 = _mm256_loadu_pd(y + k + 4);
        y0 = _mm256_fmadd_pd(a, _mm256_loadu_pd(x + k), y0);
        y1 = _mm256_fmadd_pd(a, _mm256_loadu_pd(x + k + 4), y1);
        _mm256_storeu_pd(y + k, y0);
        _mm256_storeu_pd(y + k + 4, y1);
    }
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(y + k, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    }
    for (; k < n; ++k) y[k] += alpha * x[k];
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 16 <= n; k += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(y + k + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k + 8), _mm256_loadu_pd(y + k + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k + 12), _mm256_loadu_pd(y + k + 12), acc3);
    }
    for (; k + 4 <= n; k += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
    }
    const __m256d acc = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    const __m128d half = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
    double sum = _mm_cvtsd_f64(_mm_add_sd(half, _mm_unpackhi_pd(half, half)));
    for (; k < n; ++k) sum += x[k] * y[k];
    return sum;
}

void prelu(double slope, const double* z, double* out, std::size_t n) {
    const __m256d a = _mm256_set1_pd(slope);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d v = _mm256_loadu_pd(z + k);
        const __m256d positive = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + k, _mm256_blendv_pd(_mm256_mul_pd(a, v), v, positive));
    }
    for (; k < n; ++k) out[k] = z[k] > 0.0 ? z[k] : slope * z[k];
}

void prelu_backward(double slope, const double* z, const double* grad_out, double* grad_in,
                    std::size_t n) {
    const __m256d a = _mm256_set1_pd(slope);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d positive = _mm256_cmp_pd(_mm256_loadu_pd(z + k), zero, _CMP_GT_OQ);
        const __m256d g = _mm256_loadu_pd(grad_out + k);
        _mm256_storeu_pd(grad_in + k, _mm256_blendv_pd(_mm256_mul_pd(a, g), g, positive));
    }
    for (; k < n; ++k) grad_in[k] = z[k] > 0.0 ? grad_out[k] : slope * grad_out[k];
}

}  // namespace pmilab::kernels::avx2
