#include "pdcp/kernels.hpp"

#if defined(PDCP_HAVE_AVX2)
#include <immintrin.h>

namespace pdcp::kern {

namespace {

// Mul-then-add, never FMA: rounding must match the scalar reference.

void v_add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void v_mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void v_scale(double c, const double* x, double* out, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vc, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = c * x[i];
}

void v_axpy(double c, const double* x, double* y, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(vc, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + c * x[i];
}

// Lane L of the accumulator is stripe L of the reference; the combine
// order (s0+s1)+(s2+s3) matches it too.
double v_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, prod);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s = s + a[i] * b[i];
  return s;
}

double v_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s = s + x[i];
  return s;
}

double v_max(const double* x, std::size_t n) {
  double m = x[0];
  std::size_t i = 1;
  if (n >= 5) {
    __m256d vm = _mm256_loadu_pd(x + 1);
    for (i = 5; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    for (int l = 0; l < 4; ++l)
      if (lanes[l] > m) m = lanes[l];
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void v_matmul(const double* a, const double* b, double* out,
              std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* orow = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d av = _mm256_set1_pd(arow[p]);
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(brow + j));
        _mm256_storeu_pd(orow + j, _mm256_add_pd(_mm256_loadu_pd(orow + j), prod));
      }
      const double avs = arow[p];
      for (; j < n; ++j) orow[j] = orow[j] + avs * brow[j];
    }
  }
}

}  // namespace

const Kernels& avx2_kernels() {
  static const Kernels k = {"avx2", v_add, v_sub,  v_mul, v_scale,
                            v_axpy, v_dot, v_sum,  v_max, v_matmul};
  return k;
}

}  // namespace pdcp::kern

#endif  // PDCP_HAVE_AVX2
