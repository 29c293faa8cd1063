#include "pdcp/nn.hpp"

#include <cmath>

namespace pdcp::nn {

Tensor ParamSet::add(const std::string& name, Tensor t) {
  for (const auto& [n, _] : items_)
    if (n == name) throw InvalidArgument("duplicate parameter name " + name);
  t.set_requires_grad(true);
  items_.emplace_back(name, t);
  return t;
}

std::vector<Tensor> ParamSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items_.size());
  for (const auto& [_, t] : items_) out.push_back(t);
  return out;
}

Tensor ParamSet::find(const std::string& name) const {
  for (const auto& [n, t] : items_)
    if (n == name) return t;
  return {};
}

void ParamSet::load_values(const std::map<std::string, Tensor>& values) {
  for (auto& [name, t] : items_) {
    auto it = values.find(name);
    if (it == values.end()) throw IoError("checkpoint missing parameter " + name);
    if (it->second.shape() != t.shape())
      throw IoError("checkpoint shape mismatch for " + name + ": " +
                    shape_str(it->second.shape()) + " vs " + shape_str(t.shape()));
    t.raw().assign(it->second.values().begin(), it->second.values().end());
  }
}

Tensor xavier_init(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& x : t.raw()) x = rng.uniform(-limit, limit);
  return t;
}

Linear::Linear(ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t out,
               Rng& rng) {
  w = ps.add(prefix + ".w", xavier_init({in, out}, in, out, rng));
  b = ps.add(prefix + ".b", Tensor::zeros({out}));
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.rank() == 1) return ops::add(ops::matmul(x, w), b);
  return ops::add_rowvec(ops::matmul(x, w), b);
}

LayerNorm::LayerNorm(ParamSet& ps, const std::string& prefix, std::size_t dim) {
  gain = ps.add(prefix + ".gain", Tensor::full({dim}, 1.0));
  bias = ps.add(prefix + ".bias", Tensor::zeros({dim}));
}

Mlp::Mlp(ParamSet& ps, const std::string& prefix, std::size_t in, std::size_t hidden,
         std::size_t out, Rng& rng)
    : fc1(ps, prefix + ".fc1", in, hidden, rng), fc2(ps, prefix + ".fc2", hidden, out, rng) {}

MultiHeadAttention::MultiHeadAttention(ParamSet& ps, const std::string& prefix, std::size_t dim,
                                       std::size_t n_heads, Rng& rng)
    : wq(ps, prefix + ".wq", dim, dim, rng),
      wk(ps, prefix + ".wk", dim, dim, rng),
      wv(ps, prefix + ".wv", dim, dim, rng),
      wo(ps, prefix + ".wo", dim, dim, rng),
      heads(n_heads) {
  if (dim % n_heads != 0) throw InvalidArgument("attention dim not divisible by heads");
}

Tensor MultiHeadAttention::forward(const Tensor& q_in, const Tensor& ctx, double attn_drop,
                                   Rng& rng, bool training) const {
  const std::size_t dim = wq.w.dim(0);
  const std::size_t dh = dim / heads;
  Tensor q = wq.forward(q_in), k = wk.forward(ctx), v = wv.forward(ctx);
  std::vector<Tensor> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = ops::slice(q, 1, h * dh, dh);
    Tensor kh = ops::slice(k, 1, h * dh, dh);
    Tensor vh = ops::slice(v, 1, h * dh, dh);
    Tensor scores =
        ops::scale(ops::matmul(qh, ops::transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    Tensor p = ops::dropout(ops::softmax(scores), attn_drop, rng, training);
    head_out.push_back(ops::matmul(p, vh));
  }
  return wo.forward(ops::concat(head_out, 1));
}

EncoderLayer::EncoderLayer(ParamSet& ps, const std::string& prefix, std::size_t dim,
                           std::size_t heads, std::size_t mlp_hidden, Rng& rng)
    : ln1(ps, prefix + ".ln1", dim),
      ln2(ps, prefix + ".ln2", dim),
      attn(ps, prefix + ".attn", dim, heads, rng),
      mlp(ps, prefix + ".mlp", dim, mlp_hidden, dim, rng) {}

Tensor EncoderLayer::forward(const Tensor& x, const DropoutRates& dr, Rng& rng,
                             bool training) const {
  Tensor h = ln1.forward(x);
  Tensor a = ops::dropout(attn.forward(h, h, dr.attn, rng, training), dr.resid, rng, training);
  Tensor y = ops::add(x, a);
  Tensor m = ops::dropout(mlp.forward(ln2.forward(y)), dr.mlp, rng, training);
  return ops::add(y, m);
}

DecoderLayer::DecoderLayer(ParamSet& ps, const std::string& prefix, std::size_t dim,
                           std::size_t heads, std::size_t mlp_hidden, Rng& rng)
    : ln1(ps, prefix + ".ln1", dim),
      ln2(ps, prefix + ".ln2", dim),
      ln3(ps, prefix + ".ln3", dim),
      self_attn(ps, prefix + ".self", dim, heads, rng),
      cross_attn(ps, prefix + ".cross", dim, heads, rng),
      mlp(ps, prefix + ".mlp", dim, mlp_hidden, dim, rng) {}

Tensor DecoderLayer::forward(const Tensor& x, const Tensor& memory, const DropoutRates& dr,
                             Rng& rng, bool training) const {
  Tensor h = ln1.forward(x);
  Tensor a = ops::dropout(self_attn.forward(h, h, dr.attn, rng, training), dr.resid, rng, training);
  Tensor y = ops::add(x, a);
  Tensor c = ops::dropout(cross_attn.forward(ln2.forward(y), memory, dr.attn, rng, training),
                          dr.resid, rng, training);
  y = ops::add(y, c);
  Tensor m = ops::dropout(mlp.forward(ln3.forward(y)), dr.mlp, rng, training);
  return ops::add(y, m);
}

std::vector<double> sinusoidal_embedding(double position, std::size_t dim) {
  std::vector<double> e(dim);
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
    e[2 * i] = std::sin(position * freq);
    e[2 * i + 1] = std::cos(position * freq);
  }
  if (dim % 2 == 1) e[dim - 1] = std::sin(position);
  return e;
}

AdamW::AdamW(std::vector<Tensor> params, double lr, double weight_decay, double beta1,
             double beta2, double eps)
    : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Tensor& p : params)
    slots_.push_back({p, std::vector<double>(p.size(), 0.0), std::vector<double>(p.size(), 0.0)});
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Slot& s : slots_) {
    auto g = s.p.grad();
    double* p = s.p.raw().data();
    for (std::size_t i = 0; i < s.p.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * gi;
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * gi * gi;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      p[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * p[i]);
    }
  }
}

}  // namespace pdcp::nn
