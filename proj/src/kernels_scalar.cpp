#include "pdcp/kernels.hpp"

namespace pdcp::kern {

namespace {

void s_add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_scale(double c, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = c * x[i];
}

void s_axpy(double c, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + c * x[i];
}

double s_dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t nv = n - n % 4;
  for (std::size_t i = 0; i < nv; i += 4) {
    s0 = s0 + a[i + 0] * b[i + 0];
    s1 = s1 + a[i + 1] * b[i + 1];
    s2 = s2 + a[i + 2] * b[i + 2];
    s3 = s3 + a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (std::size_t i = nv; i < n; ++i) s = s + a[i] * b[i];
  return s;
}

double s_sum(const double* x, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t nv = n - n % 4;
  for (std::size_t i = 0; i < nv; i += 4) {
    s0 = s0 + x[i + 0];
    s1 = s1 + x[i + 1];
    s2 = s2 + x[i + 2];
    s3 = s3 + x[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (std::size_t i = nv; i < n; ++i) s = s + x[i];
  return s;
}

double s_max(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void s_matmul(const double* a, const double* b, double* out,
              std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* orow = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] = orow[j] + av * brow[j];
    }
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k = {"scalar", s_add, s_sub,  s_mul, s_scale,
                            s_axpy,   s_dot, s_sum,  s_max, s_matmul};
  return k;
}

}  // namespace pdcp::kern
