#pragma once

#include <vector>

#include "pdcp/rng.hpp"
#include "pdcp/tensor.hpp"

// Eager op table with tape recording. Every op validates shapes
// (ShapeMismatch), checks its output for NaN/Inf (NonFinite) and registers
// a reverse-mode closure when any input requires grad.

namespace pdcp::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);

// [m,k]x[k,n] -> [m,n]; [k]x[k,n] -> [n]; [m,k]x[k] -> [m]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// [m,n] + [n] broadcast over rows
Tensor add_rowvec(const Tensor& m, const Tensor& v);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis = 0);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len);
Tensor reshape(const Tensor& a, Shape shape);

Tensor softmax(const Tensor& a);  // last dim
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);
Tensor l2_norm(const Tensor& a);
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

// softmax(q k^T / sqrt(d)) v
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Inverted-scale mask dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training);

Tensor mse(const Tensor& a, const Tensor& b);

}  // namespace pdcp::ops
