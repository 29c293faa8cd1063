#include "pdcp/kernels.hpp"

#if defined(PDCP_HAVE_NEON)
#include <arm_neon.h>

namespace pdcp::kern {

namespace {

// Two float64x2 registers per step keep the 4-stripe reduction layout of
// the scalar reference: acc01 holds stripes 0,1 and acc23 holds 2,3.

void v_add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void v_mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void v_scale(double c, const double* x, double* out, std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vc, vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = c * x[i];
}

void v_axpy(double c, const double* x, double* y, std::size_t n) {
  const float64x2_t vc = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t prod = vmulq_f64(vc, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + c * x[i];
}

double v_dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0), acc23 = vdupq_n_f64(0.0);
  const std::size_t nv = n - n % 4;
  std::size_t i = 0;
  for (; i < nv; i += 4) {
    acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double s = (vgetq_lane_f64(acc01, 0) + vgetq_lane_f64(acc01, 1)) +
             (vgetq_lane_f64(acc23, 0) + vgetq_lane_f64(acc23, 1));
  for (; i < n; ++i) s = s + a[i] * b[i];
  return s;
}

double v_sum(const double* x, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0), acc23 = vdupq_n_f64(0.0);
  const std::size_t nv = n - n % 4;
  std::size_t i = 0;
  for (; i < nv; i += 4) {
    acc01 = vaddq_f64(acc01, vld1q_f64(x + i));
    acc23 = vaddq_f64(acc23, vld1q_f64(x + i + 2));
  }
  double s = (vgetq_lane_f64(acc01, 0) + vgetq_lane_f64(acc01, 1)) +
             (vgetq_lane_f64(acc23, 0) + vgetq_lane_f64(acc23, 1));
  for (; i < n; ++i) s = s + x[i];
  return s;
}

double v_max(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void v_matmul(const double* a, const double* b, double* out,
              std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* orow = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const float64x2_t av = vdupq_n_f64(arow[p]);
      const double* brow = b + p * n;
      std::size_t j = 0;
      for (; j + 2 <= n; j += 2) {
        float64x2_t prod = vmulq_f64(av, vld1q_f64(brow + j));
        vst1q_f64(orow + j, vaddq_f64(vld1q_f64(orow + j), prod));
      }
      const double avs = arow[p];
      for (; j < n; ++j) orow[j] = orow[j] + avs * brow[j];
    }
  }
}

}  // namespace

const Kernels& neon_kernels() {
  static const Kernels k = {"neon", v_add, v_sub,  v_mul, v_scale,
                            v_axpy, v_dot, v_sum,  v_max, v_matmul};
  return k;
}

}  // namespace pdcp::kern

#endif  // PDCP_HAVE_NEON
