#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>

#include "pdcp/checkpoint.hpp"
#include "pdcp/finite_diff.hpp"
#include "pdcp/ops.hpp"
#include "pdcp/rng.hpp"
#include "pdcp/tensor.hpp"

using namespace pdcp;

TEST_CASE("matmul identity-padded times ones gives row sums") {
  // [[1,0,0],[0,1,0]] . [[1],[1],[1]] = [[1],[1]]
  Tensor a = Tensor::from_vector({2, 3}, {1, 0, 0, 0, 1, 0});
  Tensor b = Tensor::from_vector({3, 1}, {1, 1, 1});
  Tensor c = ops::matmul(a, b);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c(0, 0) == 1.0);
  CHECK(c(1, 0) == 1.0);
}

TEST_CASE("softmax of zeros is uniform") {
  Tensor x = Tensor::from_vector({3}, {0, 0, 0});
  Tensor y = ops::softmax(x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(y(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("cosine similarity of a vector with itself is 1") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor u = Tensor::from_vector({8}, rng.normal_vec(8));
    CHECK(std::abs(ops::cosine_similarity(u, u).item() - 1.0) <= 1e-12);
  }
}

TEST_CASE("backward of sum gives ones") {
  Tape::active().reset();
  Tensor x = Tensor::from_vector({3}, {2, -1, 5}, true);
  Tensor loss = ops::sum(x);
  Tape::active().backward(loss);
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == 1.0);
}

TEST_CASE("backward of squared norm is 2x") {
  Tape::active().reset();
  Tensor x = Tensor::from_vector({2}, {1, 2}, true);
  Tensor loss = ops::dot(x, x);
  Tape::active().backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward errors without history") {
  Tape::active().reset();
  Tensor x = Tensor::scalar(3.0, true);
  CHECK_THROWS_AS(Tape::active().backward(x), NoTape);
}

TEST_CASE("shape mismatch names the op") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 2});
  CHECK_THROWS_WITH_AS(ops::add(a, b), doctest::Contains("add"), ShapeMismatch);
  CHECK_THROWS_AS(ops::matmul(a, a), ShapeMismatch);
}

TEST_CASE("non-finite outputs are rejected") {
  Tensor x = Tensor::from_vector({2}, {-1.0, 2.0});
  CHECK_THROWS_AS(ops::log(x), NonFinite);
  Tensor big = Tensor::from_vector({1}, {1e308});
  CHECK_THROWS_AS(ops::exp(big), NonFinite);
}

TEST_CASE("gradient check on composite graph ops") {
  Rng rng(5);
  Tensor w = Tensor::from_vector({4, 3}, rng.normal_vec(12), true);
  Tensor x = Tensor::from_vector({2, 4}, rng.normal_vec(8), true);
  Tensor gain = Tensor::from_vector({3}, {1.0, 0.9, 1.1}, true);
  Tensor bias = Tensor::from_vector({3}, {0.1, -0.2, 0.0}, true);
  auto f = [&] {
    Tensor h = ops::layer_norm(ops::tanh(ops::matmul(x, w)), gain, bias);
    Tensor s = ops::softmax(h);
    return ops::mean(ops::mul(s, ops::exp(ops::scale(h, 0.5))));
  };
  CHECK(finite_diff_check(f, {w, x, gain, bias}, 1e-6) < 1e-7);
}

TEST_CASE("gradient check covers attention and cosine path") {
  Rng rng(6);
  Tensor q = Tensor::from_vector({3, 4}, rng.normal_vec(12), true);
  Tensor k = Tensor::from_vector({5, 4}, rng.normal_vec(20), true);
  Tensor v = Tensor::from_vector({5, 4}, rng.normal_vec(20), true);
  Tensor u = Tensor::from_vector({4}, rng.normal_vec(4), true);
  auto f = [&] {
    Tensor o = ops::attention(q, k, v);
    Tensor row = ops::slice(o, 0, 1, 1);
    return ops::cosine_similarity(ops::reshape(row, {4}), u);
  };
  CHECK(finite_diff_check(f, {q, k, v, u}, 1e-6) < 1e-7);
}

TEST_CASE("finite difference check is exact for quadratics") {
  Rng rng(3);
  Tensor x = Tensor::from_vector({6}, rng.normal_vec(6), true);
  auto f = [&] { return ops::dot(x, x); };
  // No truncation error for quadratics; a mid-size step keeps roundoff down.
  CHECK(finite_diff_check(f, {x}, 1e-3) < 1e-10);
}

TEST_CASE("finite difference rejects step zero") {
  Tensor x = Tensor::scalar(1.0, true);
  auto f = [&] { return ops::mul(x, x); };
  CHECK_THROWS_AS(finite_diff_check(f, {x}, 0.0), InvalidArgument);
}

TEST_CASE("gradient of a sum of losses is the sum of gradients") {
  Rng rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    Tensor x = Tensor::from_vector({5}, rng.normal_vec(5), true);
    Tensor y = Tensor::from_vector({5}, rng.normal_vec(5), true);

    Tape::active().reset();
    Tensor l1 = ops::mean(ops::mul(x, y));
    Tensor l2 = ops::dot(ops::tanh(x), ops::tanh(x));
    Tape::active().backward(l1);
    std::vector<double> g1(x.grad().begin(), x.grad().end());
    Tape::active().backward(l2);
    std::vector<double> g2(x.grad().begin(), x.grad().end());
    Tape::active().backward(ops::add(l1, l2));
    for (std::size_t i = 0; i < 5; ++i)
      CHECK(x.grad()[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-12));
    Tape::active().reset();
  }
}

TEST_CASE("rng draws are reproducible per seed and stream-independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // forked streams are unaffected by draws on the parent
  Rng r1(9), r2(9);
  Rng f1 = r1.fork(3);
  (void)r2.normal_vec(1000);
  Rng f2 = r2.fork(3);
  for (int i = 0; i < 50; ++i) CHECK(f1.next_u64() == f2.next_u64());
}

TEST_CASE("uniform draws live in [0,1)") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("standard normal sample moments within CLT bounds") {
  Rng rng(2024);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("evaluation is bit-deterministic for a fixed seed and op sequence") {
  auto run = [] {
    Rng rng(77);
    Tensor a = Tensor::from_vector({4, 4}, rng.normal_vec(16));
    Tensor b = Tensor::from_vector({4, 4}, rng.normal_vec(16));
    Tensor c = ops::softmax(ops::matmul(a, b));
    return std::vector<double>(c.values().begin(), c.values().end());
  };
  auto v1 = run(), v2 = run();
  CHECK(std::memcmp(v1.data(), v2.data(), v1.size() * sizeof(double)) == 0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(55);
  std::vector<std::pair<std::string, Tensor>> ts;
  ts.emplace_back("layer.w", Tensor::from_vector({3, 4}, rng.normal_vec(12)));
  ts.emplace_back("layer.b", Tensor::from_vector({4}, {0.0, -0.0, 1e-300, 12345.678901234567}));
  ts.emplace_back("scalar", Tensor::scalar(0.1));

  const std::string path = "test_ckpt_roundtrip.pdcp";
  save_checkpoint(path, ts);
  auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == ts.size());
  for (const auto& [name, t] : ts) {
    REQUIRE(loaded.count(name) == 1);
    const Tensor& l = loaded.at(name);
    REQUIRE(l.shape() == t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) {
      double x = t.values()[i], y = l.values()[i];
      CHECK(std::memcmp(&x, &y, sizeof(double)) == 0);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("bad checkpoint magic is rejected") {
  const std::string path = "test_ckpt_bad.pdcp";
  FILE* f = std::fopen(path.c_str(), "wb");
  std::fputs("NOPE", f);
  std::fclose(f);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
  std::remove(path.c_str());
}
