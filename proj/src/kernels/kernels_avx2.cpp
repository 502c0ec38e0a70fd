// AVX2+FMA kernels. This translation unit is compiled with -mavx2 -mfma;
// nothing here runs unless dispatch has verified CPU support.

#include <immintrin.h>

#include <algorithm>

#include "staykit/kernels.hpp"

namespace staykit::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

void v_matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  const std::size_t n4 = n & ~std::size_t(3);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      const double* brow = b + kk * n;
      const __m256d va = _mm256_set1_pd(av);
      std::size_t j = 0;
      for (; j < n4; j += 4) {
        __m256d vc = _mm256_loadu_pd(crow + j);
        vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc);
        _mm256_storeu_pd(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

inline double dot_avx2(const double* a, const double* b, std::size_t len) {
  const std::size_t len4 = len & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i < len4; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double out = hsum(acc);
  for (; i < len; ++i) out += a[i] * b[i];
  return out;
}

void v_matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double acc = dot_avx2(arow, b + j * k, k);
      double& out = c[i * n + j];
      out = accumulate ? out + acc : acc;
    }
  }
}

void v_matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  const std::size_t n4 = n & ~std::size_t(3);
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* brow = b + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[kk * m + i];
      double* crow = c + i * n;
      const __m256d va = _mm256_set1_pd(av);
      std::size_t j = 0;
      for (; j < n4; j += 4) {
        __m256d vc = _mm256_loadu_pd(crow + j);
        vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc);
        _mm256_storeu_pd(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

double v_dot(const double* a, const double* b, std::size_t len) { return dot_avx2(a, b, len); }

void v_axpy(double alpha, const double* x, double* y, std::size_t len) {
  const std::size_t len4 = len & ~std::size_t(3);
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i < len4; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < len; ++i) y[i] += alpha * x[i];
}

void v_add(const double* a, const double* b, double* out, std::size_t len) {
  const std::size_t len4 = len & ~std::size_t(3);
  std::size_t i = 0;
  for (; i < len4; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < len; ++i) out[i] = a[i] + b[i];
}

void v_sub(const double* a, const double* b, double* out, std::size_t len) {
  const std::size_t len4 = len & ~std::size_t(3);
  std::size_t i = 0;
  for (; i < len4; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < len; ++i) out[i] = a[i] - b[i];
}

void v_mul(const double* a, const double* b, double* out, std::size_t len) {
  const std::size_t len4 = len & ~std::size_t(3);
  std::size_t i = 0;
  for (; i < len4; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < len; ++i) out[i] = a[i] * b[i];
}

void v_scale(const double* a, double s, double* out, std::size_t len) {
  const std::size_t len4 = len & ~std::size_t(3);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i < len4; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < len; ++i) out[i] = a[i] * s;
}

double v_sum(const double* a, std::size_t len) {
  const std::size_t len4 = len & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i < len4; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double out = hsum(acc);
  for (; i < len; ++i) out += a[i];
  return out;
}

}  // namespace

const OpsTable& avx2_table() {
  static const OpsTable table = {v_matmul_nn, v_matmul_nt, v_matmul_tn, v_dot, v_axpy,
                                 v_add,       v_sub,       v_mul,       v_scale, v_sum};
  return table;
}

}  // namespace staykit::kernels
