#include "pdcp/ops.hpp"

#include <cmath>
#include <cstring>

#include "pdcp/kernels.hpp"

namespace pdcp::ops {

namespace {

using detail::TensorData;
using DPtr = std::shared_ptr<TensorData>;

void check_finite(const Tensor& t, const char* op) {
  for (double x : t.values())
    if (!std::isfinite(x)) throw NonFinite(std::string(op) + " produced " + std::to_string(x));
}

bool wants_grad(const Tensor& t) { return t.requires_grad() && Tape::grad_enabled(); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeMismatch(std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                        shape_str(b.shape()));
}

// rows/cols view of a tensor treated as a matrix over its last dimension
std::size_t last_dim(const Tensor& t, const char* op) {
  if (t.rank() == 0) throw ShapeMismatch(std::string(op) + ": scalar input");
  return t.shape().back();
}

double* grad_of(const DPtr& d) { return d->g.data(); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = make_op_output(a.shape(), a.requires_grad() || b.requires_grad());
  kern::active().add(a.values().data(), b.values().data(), out.raw().data(), out.size());
  check_finite(out, "add");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), pb = b.data_ptr(), po = out.data_ptr();
    Tape::active().record("add", {pa, pb, po}, [pa, pb, po] {
      const std::size_t n = po->g.size();
      if (pa->requires_grad) kern::active().axpy(1.0, po->g.data(), grad_of(pa), n);
      if (pb->requires_grad) kern::active().axpy(1.0, po->g.data(), grad_of(pb), n);
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = make_op_output(a.shape(), a.requires_grad() || b.requires_grad());
  kern::active().sub(a.values().data(), b.values().data(), out.raw().data(), out.size());
  check_finite(out, "sub");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), pb = b.data_ptr(), po = out.data_ptr();
    Tape::active().record("sub", {pa, pb, po}, [pa, pb, po] {
      const std::size_t n = po->g.size();
      if (pa->requires_grad) kern::active().axpy(1.0, po->g.data(), grad_of(pa), n);
      if (pb->requires_grad) kern::active().axpy(-1.0, po->g.data(), grad_of(pb), n);
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = make_op_output(a.shape(), a.requires_grad() || b.requires_grad());
  kern::active().mul(a.values().data(), b.values().data(), out.raw().data(), out.size());
  check_finite(out, "mul");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), pb = b.data_ptr(), po = out.data_ptr();
    Tape::active().record("mul", {pa, pb, po}, [pa, pb, po] {
      const std::size_t n = po->g.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (pa->requires_grad) pa->g[i] += po->g[i] * pb->v[i];
        if (pb->requires_grad) pb->g[i] += po->g[i] * pa->v[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = make_op_output(a.shape(), a.requires_grad());
  kern::active().scale(c, a.values().data(), out.raw().data(), out.size());
  check_finite(out, "scale");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), po = out.data_ptr();
    Tape::active().record("scale", {pa, po}, [pa, po, c] {
      kern::active().axpy(c, po->g.data(), grad_of(pa), po->g.size());
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out = make_op_output(a.shape(), a.requires_grad());
  for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] = a.values()[i] + c;
  check_finite(out, "add_scalar");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), po = out.data_ptr();
    Tape::active().record("add_scalar", {pa, po}, [pa, po] {
      kern::active().axpy(1.0, po->g.data(), grad_of(pa), po->g.size());
    });
  }
  return out;
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  // Normalize rank-1 operands to matrices, drop the unit dim afterwards.
  const bool a_vec = a.rank() == 1, b_vec = b.rank() == 1;
  if (a.rank() > 2 || b.rank() > 2 || a.rank() == 0 || b.rank() == 0)
    throw ShapeMismatch("matmul: ranks " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t m = a_vec ? 1 : a.dim(0);
  const std::size_t k = a_vec ? a.dim(0) : a.dim(1);
  const std::size_t k2 = b_vec ? b.dim(0) : b.dim(0);
  const std::size_t n = b_vec ? 1 : b.dim(1);
  if (k != k2)
    throw ShapeMismatch("matmul: inner dims " + shape_str(a.shape()) + " x " +
                        shape_str(b.shape()));

  Shape out_shape;
  if (a_vec && b_vec) out_shape = {};
  else if (a_vec) out_shape = {n};
  else if (b_vec) out_shape = {m};
  else out_shape = {m, n};

  Tensor out = make_op_output(out_shape, a.requires_grad() || b.requires_grad());
  kern::active().matmul(a.values().data(), b.values().data(), out.raw().data(), m, k, n);
  check_finite(out, "matmul");

  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), pb = b.data_ptr(), po = out.data_ptr();
    Tape::active().record("matmul", {pa, pb, po}, [pa, pb, po, m, k, n] {
      // dA = G B^T ; dB = A^T G (done index-wise to avoid transposing copies)
      if (pa->requires_grad) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p)
            pa->g[i * k + p] += kern::active().dot(po->g.data() + i * n, pb->v.data() + p * n, n);
      }
      if (pb->requires_grad) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p)
            kern::active().axpy(pa->v[i * k + p], po->g.data() + i * n, pb->g.data() + p * n, n);
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeMismatch("transpose: rank " + shape_str(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor out = make_op_output({n, m}, a.requires_grad());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.raw()[j * m + i] = a.values()[i * n + j];
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), po = out.data_ptr();
    Tape::active().record("transpose", {pa, po}, [pa, po, m, n] {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) pa->g[i * n + j] += po->g[j * m + i];
    });
  }
  return out;
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  if (m.rank() != 2 || v.rank() != 1 || m.dim(1) != v.dim(0))
    throw ShapeMismatch("add_rowvec: " + shape_str(m.shape()) + " + " + shape_str(v.shape()));
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor out = make_op_output(m.shape(), m.requires_grad() || v.requires_grad());
  for (std::size_t r = 0; r < rows; ++r)
    kern::active().add(m.values().data() + r * cols, v.values().data(),
                       out.raw().data() + r * cols, cols);
  check_finite(out, "add_rowvec");
  if (out.requires_grad()) {
    DPtr pm = m.data_ptr(), pv = v.data_ptr(), po = out.data_ptr();
    Tape::active().record("add_rowvec", {pm, pv, po}, [pm, pv, po, rows, cols] {
      if (pm->requires_grad) kern::active().axpy(1.0, po->g.data(), pm->g.data(), rows * cols);
      if (pv->requires_grad)
        for (std::size_t r = 0; r < rows; ++r)
          kern::active().axpy(1.0, po->g.data() + r * cols, pv->g.data(), cols);
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeMismatch("concat: no parts");
  const std::size_t rank = parts[0].rank();
  if (rank == 0 || rank > 2 || axis >= rank)
    throw ShapeMismatch("concat: rank " + shape_str(parts[0].shape()) + " axis " +
                        std::to_string(axis));
  bool rg = false;
  std::size_t cat = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != rank) throw ShapeMismatch("concat: mixed ranks");
    for (std::size_t d = 0; d < rank; ++d)
      if (d != axis && p.dim(d) != parts[0].dim(d))
        throw ShapeMismatch("concat: " + shape_str(p.shape()) + " vs " +
                            shape_str(parts[0].shape()));
    cat += p.dim(axis);
    rg = rg || p.requires_grad();
  }
  Shape out_shape = parts[0].shape();
  out_shape[axis] = cat;
  Tensor out = make_op_output(out_shape, rg);

  // Copy part p into its slot; remember offsets for the backward scatter.
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  if (rank == 1 || axis == 0) {
    for (const Tensor& p : parts) {
      offsets.push_back(off);
      std::memcpy(out.raw().data() + off, p.values().data(), p.size() * sizeof(double));
      off += p.size();
    }
  } else {  // rank 2, axis 1
    const std::size_t rows = parts[0].dim(0);
    for (const Tensor& p : parts) {
      offsets.push_back(off);
      for (std::size_t r = 0; r < rows; ++r)
        std::memcpy(out.raw().data() + r * cat + off, p.values().data() + r * p.dim(1),
                    p.dim(1) * sizeof(double));
      off += p.dim(1);
    }
  }

  if (out.requires_grad()) {
    std::vector<DPtr> ptrs;
    for (const Tensor& p : parts) ptrs.push_back(p.data_ptr());
    DPtr po = out.data_ptr();
    std::vector<DPtr> rec = ptrs;
    rec.push_back(po);
    const std::size_t rows = rank == 2 ? parts[0].dim(0) : 1;
    std::vector<std::size_t> widths;
    for (const Tensor& p : parts) widths.push_back(rank == 2 ? p.dim(1) : p.size());
    const bool along_cols = (rank == 2 && axis == 1);
    Tape::active().record("concat", rec, [ptrs, po, offsets, widths, rows, cat, along_cols] {
      for (std::size_t pi = 0; pi < ptrs.size(); ++pi) {
        if (!ptrs[pi]->requires_grad) continue;
        if (!along_cols) {
          kern::active().axpy(1.0, po->g.data() + offsets[pi], ptrs[pi]->g.data(),
                              ptrs[pi]->g.size());
        } else {
          for (std::size_t r = 0; r < rows; ++r)
            kern::active().axpy(1.0, po->g.data() + r * cat + offsets[pi],
                                ptrs[pi]->g.data() + r * widths[pi], widths[pi]);
        }
      }
    });
  }
  return out;
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len) {
  if (a.rank() == 0 || a.rank() > 2 || axis >= a.rank() || start + len > a.dim(axis) || len == 0)
    throw ShapeMismatch("slice: " + shape_str(a.shape()) + " axis " + std::to_string(axis) +
                        " [" + std::to_string(start) + "," + std::to_string(start + len) + ")");
  Shape out_shape = a.shape();
  out_shape[axis] = len;
  Tensor out = make_op_output(out_shape, a.requires_grad());

  const bool along_cols = (a.rank() == 2 && axis == 1);
  const std::size_t rows = a.rank() == 2 ? a.dim(0) : 1;
  const std::size_t in_w = a.rank() == 2 ? a.dim(1) : a.size();
  if (!along_cols) {
    const std::size_t row_w = a.rank() == 2 ? a.dim(1) : 1;
    std::memcpy(out.raw().data(), a.values().data() + start * row_w,
                len * row_w * sizeof(double));
  } else {
    for (std::size_t r = 0; r < rows; ++r)
      std::memcpy(out.raw().data() + r * len, a.values().data() + r * in_w + start,
                  len * sizeof(double));
  }

  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), po = out.data_ptr();
    Tape::active().record("slice", {pa, po}, [pa, po, axis, start, len, rows, in_w, along_cols, a_rank = a.rank()] {
      if (!along_cols) {
        const std::size_t row_w = a_rank == 2 ? in_w : 1;
        kern::active().axpy(1.0, po->g.data(), pa->g.data() + start * row_w, len * row_w);
      } else {
        for (std::size_t r = 0; r < rows; ++r)
          kern::active().axpy(1.0, po->g.data() + r * len, pa->g.data() + r * in_w + start, len);
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (n != a.size())
    throw ShapeMismatch("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  Tensor out = make_op_output(shape, a.requires_grad());
  std::memcpy(out.raw().data(), a.values().data(), n * sizeof(double));
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), po = out.data_ptr();
    Tape::active().record("reshape", {pa, po}, [pa, po] {
      kern::active().axpy(1.0, po->g.data(), pa->g.data(), po->g.size());
    });
  }
  return out;
}

Tensor softmax(const Tensor& a) {
  const std::size_t cols = last_dim(a, "softmax");
  const std::size_t rows = a.size() / cols;
  Tensor out = make_op_output(a.shape(), a.requires_grad());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.values().data() + r * cols;
    double* y = out.raw().data() + r * cols;
    const double mx = kern::active().max(x, cols);
    for (std::size_t j = 0; j < cols; ++j) y[j] = std::exp(x[j] - mx);
    const double z = kern::active().sum(y, cols);
    kern::active().scale(1.0 / z, y, y, cols);
  }
  check_finite(out, "softmax");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), po = out.data_ptr();
    Tape::active().record("softmax", {pa, po}, [pa, po, rows, cols] {
      for (std::size_t r = 0; r < rows; ++r) {
        const double* y = po->v.data() + r * cols;
        const double* gy = po->g.data() + r * cols;
        double* gx = pa->g.data() + r * cols;
        const double gdoty = kern::active().dot(gy, y, cols);
        for (std::size_t j = 0; j < cols; ++j) gx[j] += y[j] * (gy[j] - gdoty);
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t cols = last_dim(a, "layer_norm");
  if (gain.rank() != 1 || bias.rank() != 1 || gain.dim(0) != cols || bias.dim(0) != cols)
    throw ShapeMismatch("layer_norm: params " + shape_str(gain.shape()) + "/" +
                        shape_str(bias.shape()) + " for input " + shape_str(a.shape()));
  const std::size_t rows = a.size() / cols;
  Tensor out = make_op_output(a.shape(),
                              a.requires_grad() || gain.requires_grad() || bias.requires_grad());
  std::vector<double> inv_sigma(rows), xhat(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.values().data() + r * cols;
    const double m = kern::active().sum(x, cols) / static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (x[j] - m) * (x[j] - m);
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = is;
    for (std::size_t j = 0; j < cols; ++j) {
      const double h = (x[j] - m) * is;
      xhat[r * cols + j] = h;
      out.raw()[r * cols + j] = gain.values()[j] * h + bias.values()[j];
    }
  }
  check_finite(out, "layer_norm");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), pg = gain.data_ptr(), pb = bias.data_ptr(), po = out.data_ptr();
    Tape::active().record(
        "layer_norm", {pa, pg, pb, po},
        [pa, pg, pb, po, rows, cols, inv_sigma = std::move(inv_sigma), xhat = std::move(xhat)] {
          for (std::size_t r = 0; r < rows; ++r) {
            const double* gy = po->g.data() + r * cols;
            const double* h = xhat.data() + r * cols;
            if (pb->requires_grad)
              kern::active().axpy(1.0, gy, pb->g.data(), cols);
            if (pg->requires_grad)
              for (std::size_t j = 0; j < cols; ++j) pg->g[j] += gy[j] * h[j];
            if (pa->requires_grad) {
              double mean_gh = 0.0, mean_ghh = 0.0;
              for (std::size_t j = 0; j < cols; ++j) {
                const double gh = gy[j] * pg->v[j];
                mean_gh += gh;
                mean_ghh += gh * h[j];
              }
              mean_gh /= static_cast<double>(cols);
              mean_ghh /= static_cast<double>(cols);
              for (std::size_t j = 0; j < cols; ++j) {
                const double gh = gy[j] * pg->v[j];
                pa->g[r * cols + j] += inv_sigma[r] * (gh - mean_gh - h[j] * mean_ghh);
              }
            }
          }
        });
  }
  return out;
}

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
  Tensor out = make_op_output(a.shape(), a.requires_grad());
  for (std::size_t i = 0; i < a.size(); ++i) out.raw()[i] = fwd(a.values()[i]);
  check_finite(out, name);
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), po = out.data_ptr();
    Tape::active().record(name, {pa, po}, [pa, po, bwd] {
      for (std::size_t i = 0; i < po->g.size(); ++i)
        pa->g[i] += po->g[i] * bwd(pa->v[i], po->v[i]);
    });
  }
  return out;
}

}  // namespace

Tensor exp(const Tensor& a) {
  return unary_op(a, "exp", [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op(a, "log", [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& a) {
  return unary_op(a, "tanh", [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor sum(const Tensor& a) {
  Tensor out = make_op_output({}, a.requires_grad());
  out.raw()[0] = kern::active().sum(a.values().data(), a.size());
  check_finite(out, "sum");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), po = out.data_ptr();
    Tape::active().record("sum", {pa, po}, [pa, po] {
      const double g = po->g[0];
      for (auto& x : pa->g) x += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeMismatch("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  Tensor out = make_op_output({}, a.requires_grad() || b.requires_grad());
  out.raw()[0] = kern::active().dot(a.values().data(), b.values().data(), a.size());
  check_finite(out, "dot");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), pb = b.data_ptr(), po = out.data_ptr();
    Tape::active().record("dot", {pa, pb, po}, [pa, pb, po] {
      const double g = po->g[0];
      if (pa->requires_grad) kern::active().axpy(g, pb->v.data(), pa->g.data(), pa->g.size());
      if (pb->requires_grad) kern::active().axpy(g, pa->v.data(), pb->g.data(), pb->g.size());
    });
  }
  return out;
}

Tensor l2_norm(const Tensor& a) {
  Tensor out = make_op_output({}, a.requires_grad());
  out.raw()[0] = std::sqrt(kern::active().dot(a.values().data(), a.values().data(), a.size()));
  check_finite(out, "l2_norm");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), po = out.data_ptr();
    Tape::active().record("l2_norm", {pa, po}, [pa, po] {
      const double nrm = po->v[0];
      if (nrm == 0.0) throw NonFinite("l2_norm backward at zero vector");
      kern::active().axpy(po->g[0] / nrm, pa->v.data(), pa->g.data(), pa->g.size());
    });
  }
  return out;
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "cosine_similarity");
  const double na = std::sqrt(kern::active().dot(a.values().data(), a.values().data(), a.size()));
  const double nb = std::sqrt(kern::active().dot(b.values().data(), b.values().data(), b.size()));
  if (na == 0.0 || nb == 0.0) throw NonFinite("cosine_similarity of zero vector");
  const double d = kern::active().dot(a.values().data(), b.values().data(), a.size());
  const double s = d / (na * nb);
  Tensor out = make_op_output({}, a.requires_grad() || b.requires_grad());
  out.raw()[0] = s;
  check_finite(out, "cosine_similarity");
  if (out.requires_grad()) {
    DPtr pa = a.data_ptr(), pb = b.data_ptr(), po = out.data_ptr();
    Tape::active().record("cosine_similarity", {pa, pb, po}, [pa, pb, po, na, nb, s] {
      const double g = po->g[0];
      const std::size_t n = pa->v.size();
      if (pa->requires_grad)
        for (std::size_t i = 0; i < n; ++i)
          pa->g[i] += g * (pb->v[i] / (na * nb) - s * pa->v[i] / (na * na));
      if (pb->requires_grad)
        for (std::size_t i = 0; i < n; ++i)
          pb->g[i] += g * (pa->v[i] / (na * nb) - s * pb->v[i] / (nb * nb));
    });
  }
  return out;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) ||
      k.dim(0) != v.dim(0))
    throw ShapeMismatch("attention: q" + shape_str(q.shape()) + " k" + shape_str(k.shape()) +
                        " v" + shape_str(v.shape()));
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.dim(1))));
  return matmul(softmax(scores), v);
}

Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw InvalidArgument("dropout rate must be in [0,1)");
  if (!training || rate == 0.0) return a;
  Tensor mask = Tensor::zeros(a.shape());
  const double keep = 1.0 - rate;
  for (auto& x : mask.raw()) x = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  return mul(a, mask);
}

Tensor mse(const Tensor& a, const Tensor& b) {
  Tensor d = sub(a, b);
  return mean(mul(d, d));
}

}  // namespace pdcp::ops
