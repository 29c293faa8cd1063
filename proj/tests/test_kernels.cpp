#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <vector>

#include "pdcp/kernels.hpp"
#include "pdcp/rng.hpp"

using pdcp::Rng;
namespace kern = pdcp::kern;

namespace {

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!bits_equal(a[i], b[i])) return false;
  return true;
}

}  // namespace

// Every backend must reproduce the scalar reference bit-for-bit: the
// reduction stripe layout and mul-then-add rounding are part of the kernel
// contract, not an implementation detail.
TEST_CASE("simd backend matches scalar reference bit-exactly") {
  const kern::Kernels& ref = kern::scalar_kernels();
  const kern::Kernels& act = kern::active();
  INFO("active backend: ", act.name);

  Rng rng(123);
  // Sizes cover empty, sub-width, width-aligned and tailed cases.
  for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 64, 100, 1001}) {
    std::vector<double> a = rng.normal_vec(n), b = rng.normal_vec(n);
    std::vector<double> r1(n), r2(n);

    ref.add(a.data(), b.data(), r1.data(), n);
    act.add(a.data(), b.data(), r2.data(), n);
    CHECK(bits_equal(r1, r2));

    ref.sub(a.data(), b.data(), r1.data(), n);
    act.sub(a.data(), b.data(), r2.data(), n);
    CHECK(bits_equal(r1, r2));

    ref.mul(a.data(), b.data(), r1.data(), n);
    act.mul(a.data(), b.data(), r2.data(), n);
    CHECK(bits_equal(r1, r2));

    ref.scale(1.7, a.data(), r1.data(), n);
    act.scale(1.7, a.data(), r2.data(), n);
    CHECK(bits_equal(r1, r2));

    std::vector<double> y1 = b, y2 = b;
    ref.axpy(-0.3, a.data(), y1.data(), n);
    act.axpy(-0.3, a.data(), y2.data(), n);
    CHECK(bits_equal(y1, y2));

    CHECK(bits_equal(ref.dot(a.data(), b.data(), n), act.dot(a.data(), b.data(), n)));
    CHECK(bits_equal(ref.sum(a.data(), n), act.sum(a.data(), n)));
    if (n > 0) CHECK(bits_equal(ref.max(a.data(), n), act.max(a.data(), n)));
  }
}

TEST_CASE("matmul backends agree bit-exactly on awkward shapes") {
  const kern::Kernels& ref = kern::scalar_kernels();
  const kern::Kernels& act = kern::active();
  Rng rng(7);
  for (auto [m, k, n] : std::vector<std::array<std::size_t, 3>>{
           {1, 1, 1}, {2, 3, 1}, {3, 1, 5}, {4, 4, 4}, {5, 7, 3}, {8, 16, 9}, {13, 29, 31}}) {
    std::vector<double> a = rng.normal_vec(m * k), b = rng.normal_vec(k * n);
    std::vector<double> c1(m * n, 0.25), c2(m * n, 0.25);  // accumulates, no clearing
    ref.matmul(a.data(), b.data(), c1.data(), m, k, n);
    act.matmul(a.data(), b.data(), c2.data(), m, k, n);
    CHECK(bits_equal(c1, c2));
  }
}

TEST_CASE("matmul reference against naive triple loop") {
  const kern::Kernels& ref = kern::scalar_kernels();
  Rng rng(9);
  const std::size_t m = 4, k = 6, n = 5;
  std::vector<double> a = rng.normal_vec(m * k), b = rng.normal_vec(k * n), c(m * n, 0.0);
  ref.matmul(a.data(), b.data(), c.data(), m, k, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double want = 0.0;
      for (std::size_t p = 0; p < k; ++p) want += a[i * k + p] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("force_backend switches and rejects unknown names") {
  CHECK(kern::force_backend("scalar"));
  CHECK(std::string(kern::active_name()) == "scalar");
  CHECK_FALSE(kern::force_backend("no-such-backend"));
#if defined(__x86_64__)
  if (__builtin_cpu_supports("avx2")) {
    CHECK(kern::force_backend("avx2"));
    CHECK(std::string(kern::active_name()) == "avx2");
  }
#endif
}
