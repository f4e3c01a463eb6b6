// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include <immintrin.h>

#include "bdplan/kernels/kernels.hpp"

namespace bdplan::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_avx2(const double* w, size_t rows, size_t cols, size_t ld, const double* x,
               const double* bias, double* y) {
  size_t r = 0;
  // Four rows at a time share the x loads.
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = w + r * ld;
    const double* w1 = w0 + ld;
    const double* w2 = w1 + ld;
    const double* w3 = w2 + ld;
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d xv = _mm256_loadu_pd(x + c);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + c), xv, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + c), xv, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + c), xv, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(w3 + c), xv, a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; c < cols; ++c) {
      s0 += w0[c] * x[c];
      s1 += w1[c] * x[c];
      s2 += w2[c] * x[c];
      s3 += w3[c] * x[c];
    }
    if (bias) {
      s0 += bias[r];
      s1 += bias[r + 1];
      s2 += bias[r + 2];
      s3 += bias[r + 3];
    }
    y[r] = s0;
    y[r + 1] = s1;
    y[r + 2] = s2;
    y[r + 3] = s3;
  }
  for (; r < rows; ++r) {
    const double s = dot_avx2(w + r * ld, x, cols);
    y[r] = bias ? s + bias[r] : s;
  }
}

void gemv_t_acc_avx2(const double* w, size_t rows, size_t cols, size_t ld, const double* gy,
                     double* gx) {
  for (size_t r = 0; r < rows; ++r) {
    const double g = gy[r];
    if (g == 0.0) continue;
    axpy_avx2(g, w + r * ld, gx, cols);
  }
}

void ger_acc_avx2(const double* gy, const double* x, size_t rows, size_t cols, size_t ld,
                  double* gw) {
  for (size_t r = 0; r < rows; ++r) {
    const double g = gy[r];
    if (g == 0.0) continue;
    axpy_avx2(g, x, gw + r * ld, cols);
  }
}

void momentum_avx2(double* p, double* v, const double* g, double lr, double mu, size_t n) {
  const __m256d vmu = _mm256_set1_pd(mu);
  const __m256d vlr = _mm256_set1_pd(lr);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vv = _mm256_fmadd_pd(vmu, _mm256_loadu_pd(v + i), _mm256_loadu_pd(g + i));
    _mm256_storeu_pd(v + i, vv);
    _mm256_storeu_pd(p + i, _mm256_fnmadd_pd(vlr, vv, _mm256_loadu_pd(p + i)));
  }
  for (; i < n; ++i) {
    v[i] = mu * v[i] + g[i];
    p[i] -= lr * v[i];
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable t{dot_avx2,        axpy_avx2,    gemv_avx2,
                             gemv_t_acc_avx2, ger_acc_avx2, momentum_avx2};
  return &t;
}

}  // namespace bdplan::kernels::detail
