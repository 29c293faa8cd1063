#pragma once

#include <cstddef>

// Data-parallel inner loops used by the tensor engine. A scalar reference
// implementation defines the semantics; SIMD variants (AVX2 on x86-64, NEON
// on arm64) must reproduce it bit-exactly and are selected once at startup.
//
// Reduction order contract: dot/sum accumulate into four stripes
// s[L] = sum over i with i % 4 == L of the vectorized prefix (first 4*(n/4)
// elements), combined as (s0+s1)+(s2+s3), then the tail elements are added
// sequentially. matmul is ikj with k ascending per output element and no
// fused multiply-add. Any backend that follows the contract is bit-equal
// to the reference, so runtime dispatch never changes results.

namespace pdcp::kern {

struct Kernels {
  const char* name;
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(double c, const double* x, double* out, std::size_t n);
  void (*axpy)(double c, const double* x, double* y, std::size_t n);  // y += c*x
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*max)(const double* x, std::size_t n);  // n >= 1
  // out[m,n] += a[m,k] * b[k,n], row-major, no accumulator clearing
  void (*matmul)(const double* a, const double* b, double* out,
                 std::size_t m, std::size_t k, std::size_t n);
};

const Kernels& scalar_kernels();

// Active backend: picked from CPU features at first use; the PDCP_KERNELS
// environment variable ("scalar", "avx2", "neon") overrides.
const Kernels& active();
const char* active_name();

// Test hook. Returns false if the named backend is unavailable.
bool force_backend(const char* name);

}  // namespace pdcp::kern
