#pragma once

#include <map>
#include <string>
#include <vector>

#include "pdcp/ops.hpp"
#include "pdcp/rng.hpp"
#include "pdcp/tensor.hpp"

namespace pdcp::nn {

// Named parameter registry. Registration order is the checkpoint and
// optimizer iteration order, so construction order must be deterministic.
class ParamSet {
 public:
  Tensor add(const std::string& name, Tensor t);
  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::vector<Tensor> tensors() const;
  Tensor find(const std::string& name) const;  // undefined Tensor if absent

  // Copies values from a checkpoint map; every registered name must be
  // present with a matching shape.
  void load_values(const std::map<std::string, Tensor>& values);

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

Tensor xavier_init(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [out]
  Linear() = default;
  Linear(ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng);
  Tensor forward(const Tensor& x) const;  // [in] -> [out] or [m,in] -> [m,out]
};

struct LayerNorm {
  Tensor gain, bias;
  LayerNorm() = default;
  LayerNorm(ParamSet& ps, const std::string& prefix, std::size_t dim);
  Tensor forward(const Tensor& x) const { return ops::layer_norm(x, gain, bias); }
};

// Two-layer tanh MLP.
struct Mlp {
  Linear fc1, fc2;
  Mlp() = default;
  Mlp(ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t hidden,
      std::size_t out, Rng& rng);
  Tensor forward(const Tensor& x) const { return fc2.forward(ops::tanh(fc1.forward(x))); }
};

struct DropoutRates {
  double embed = 0.0;
  double attn = 0.0;
  double resid = 0.0;
  double mlp = 0.0;
};

struct MultiHeadAttention {
  Linear wq, wk, wv, wo;
  std::size_t heads = 1;
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamSet& ps, const std::string& prefix, std::size_t dim, std::size_t heads,
                     Rng& rng);
  // q_in: [m,dim], ctx: [n,dim]; self-attention passes q_in as ctx.
  Tensor forward(const Tensor& q_in, const Tensor& ctx, double attn_drop, Rng& rng,
                 bool training) const;
};

struct EncoderLayer {
  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  Mlp mlp;
  EncoderLayer() = default;
  EncoderLayer(ParamSet& ps, const std::string& prefix, std::size_t dim, std::size_t heads,
               std::size_t mlp_hidden, Rng& rng);
  Tensor forward(const Tensor& x, const DropoutRates& dr, Rng& rng, bool training) const;
};

struct DecoderLayer {
  LayerNorm ln1, ln2, ln3;
  MultiHeadAttention self_attn, cross_attn;
  Mlp mlp;
  DecoderLayer() = default;
  DecoderLayer(ParamSet& ps, const std::string& prefix, std::size_t dim, std::size_t heads,
               std::size_t mlp_hidden, Rng& rng);
  Tensor forward(const Tensor& x, const Tensor& memory, const DropoutRates& dr, Rng& rng,
                 bool training) const;
};

// Classic transformer sinusoidal embedding of an integer index.
std::vector<double> sinusoidal_embedding(double position, std::size_t dim);

class AdamW {
 public:
  AdamW(std::vector<Tensor> params, double lr, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8);
  // Applies one update from the grads accumulated by the last backward pass.
  // Params whose grad buffer is empty are treated as zero-gradient.
  void step();
  void set_lr(double lr) { lr_ = lr; }
  std::uint64_t steps_taken() const { return t_; }

 private:
  struct Slot {
    Tensor p;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  double lr_, wd_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

}  // namespace pdcp::nn
