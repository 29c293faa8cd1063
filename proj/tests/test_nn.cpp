#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pdcp/finite_diff.hpp"
#include "pdcp/nn.hpp"

using namespace pdcp;

TEST_CASE("linear layer forward matches manual affine") {
  nn::ParamSet ps;
  Rng rng(1);
  nn::Linear lin(ps, "l", 3, 2, rng);
  Tensor x = Tensor::from_vector({3}, {1.0, -2.0, 0.5});
  Tensor y = lin.forward(x);
  for (std::size_t j = 0; j < 2; ++j) {
    double want = lin.b(j);
    for (std::size_t i = 0; i < 3; ++i) want += x(i) * lin.w(i, j);
    CHECK(y(j) == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("encoder and decoder layers pass gradient checks") {
  nn::ParamSet ps;
  Rng rng(2);
  const std::size_t dim = 8, heads = 2;
  nn::EncoderLayer enc(ps, "enc", dim, heads, 16, rng);
  nn::DecoderLayer dec(ps, "dec", dim, heads, 16, rng);
  nn::DropoutRates dr;  // zero: gradients must be deterministic

  Tensor x = Tensor::from_vector({3, dim}, rng.normal_vec(3 * dim), true);
  Tensor tgt = Tensor::from_vector({2, dim}, rng.normal_vec(2 * dim), true);

  Rng unused(0);
  auto f = [&] {
    Tensor mem = enc.forward(x, dr, unused, false);
    Tensor out = dec.forward(tgt, mem, dr, unused, false);
    return ops::mean(ops::mul(out, out));
  };
  std::vector<Tensor> params = ps.tensors();
  params.push_back(x);
  params.push_back(tgt);
  CHECK(finite_diff_check(f, params, 1e-6) < 1e-6);
}

TEST_CASE("multi-head attention with zero value path ignores context") {
  nn::ParamSet ps;
  Rng rng(3);
  nn::MultiHeadAttention mha(ps, "mha", 8, 2, rng);
  // Zero V and output projections: output must be the output bias only,
  // regardless of context values.
  mha.wv.w.raw().assign(mha.wv.w.size(), 0.0);
  Rng unused(0);
  Tensor q = Tensor::from_vector({2, 8}, rng.normal_vec(16));
  Tensor ctx1 = Tensor::from_vector({4, 8}, rng.normal_vec(32));
  Tensor ctx2 = Tensor::from_vector({4, 8}, rng.normal_vec(32));
  Tensor y1 = mha.forward(q, ctx1, 0.0, unused, false);
  Tensor y2 = mha.forward(q, ctx2, 0.0, unused, false);
  for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1.values()[i] == y2.values()[i]);
}

TEST_CASE("dropout is identity in eval mode and rescales in train mode") {
  Rng rng(4);
  Tensor x = Tensor::full({1000}, 1.0);
  Tensor eval_out = ops::dropout(x, 0.5, rng, false);
  CHECK(eval_out.id() == x.id());

  Tensor train_out = ops::dropout(x, 0.5, rng, true);
  double sum = 0.0;
  for (double v : train_out.values()) {
    CHECK((v == 0.0 || v == 2.0));
    sum += v;
  }
  CHECK(sum / 1000.0 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("adamw descends a quadratic and decays weights") {
  Tensor w = Tensor::from_vector({2}, {5.0, -3.0}, true);
  nn::AdamW opt({w}, 0.05, 0.0);
  for (int step = 0; step < 400; ++step) {
    Tape::active().reset();
    Tensor loss = ops::dot(w, w);
    Tape::active().backward(loss);
    opt.step();
  }
  CHECK(std::abs(w(0)) < 1e-2);
  CHECK(std::abs(w(1)) < 1e-2);
  Tape::active().reset();

  // pure decay when gradient is absent
  Tensor v = Tensor::from_vector({1}, {1.0}, true);
  nn::AdamW opt2({v}, 0.1, 0.5);
  opt2.step();
  CHECK(v(0) == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-12));
}

TEST_CASE("param set rejects duplicates and loads by name") {
  nn::ParamSet ps;
  Rng rng(5);
  nn::Linear l1(ps, "a", 2, 2, rng);
  CHECK_THROWS_AS(ps.add("a.w", Tensor::zeros({2, 2})), InvalidArgument);

  std::map<std::string, Tensor> vals;
  vals.emplace("a.w", Tensor::from_vector({2, 2}, {1, 2, 3, 4}));
  vals.emplace("a.b", Tensor::from_vector({2}, {9, 9}));
  ps.load_values(vals);
  CHECK(ps.find("a.w")(1, 1) == 4.0);
  CHECK(ps.find("a.b")(0) == 9.0);

  vals.erase("a.b");
  nn::ParamSet ps2;
  nn::Linear l2(ps2, "a", 2, 2, rng);
  CHECK_THROWS_AS(ps2.load_values(vals), IoError);
}

TEST_CASE("sinusoidal embedding is bounded and position-sensitive") {
  auto e1 = nn::sinusoidal_embedding(1.0, 16);
  auto e2 = nn::sinusoidal_embedding(2.0, 16);
  CHECK(e1.size() == 16);
  bool differs = false;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    CHECK(std::abs(e1[i]) <= 1.0);
    if (e1[i] != e2[i]) differs = true;
  }
  CHECK(differs);
}
