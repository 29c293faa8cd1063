#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pdcp/errors.hpp"

namespace pdcp {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

namespace detail {
struct TensorData {
  Shape shape;
  std::vector<double> v;
  std::vector<double> g;  // allocated lazily by the tape
  bool requires_grad = false;
};
}  // namespace detail

// Dense row-major f64 tensor. Values are immutable once an op has consumed
// the tensor; mutation is only legal on freshly created leaves.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_vector(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const { return d_->shape; }
  std::size_t rank() const { return d_->shape.size(); }
  std::size_t size() const { return d_->v.size(); }
  std::size_t dim(std::size_t i) const { return d_->shape[i]; }

  std::span<const double> values() const { return d_->v; }
  std::vector<double>& raw() { return d_->v; }  // leaf mutation only

  double operator()(std::size_t i) const { return d_->v[i]; }
  double operator()(std::size_t i, std::size_t j) const { return d_->v[i * d_->shape[1] + j]; }
  double item() const;

  bool requires_grad() const { return d_->requires_grad; }
  void set_requires_grad(bool r) { d_->requires_grad = r; }

  // Gradient accumulated by the last backward pass; empty before any pass.
  std::span<const double> grad() const { return d_->g; }

  const void* id() const { return d_.get(); }
  std::shared_ptr<detail::TensorData> data_ptr() const { return d_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorData> d) : d_(std::move(d)) {}
  std::shared_ptr<detail::TensorData> d_;
  friend class Tape;
  friend Tensor make_op_output(Shape, bool);
};

Tensor make_op_output(Shape shape, bool requires_grad);

// Ordered record of executed ops. Backward replays entries in reverse
// execution order exactly once, with all accumulators zeroed first.
class Tape {
 public:
  static Tape& active();

  void reset();
  std::size_t size() const { return entries_.size(); }

  static bool grad_enabled();

  struct NoGrad {
    NoGrad();
    ~NoGrad();
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;
  };

  // Called by ops. backward reads out's grad and accumulates into inputs'.
  void record(const char* op, std::vector<std::shared_ptr<detail::TensorData>> tensors,
              std::function<void()> backward);

  // Accumulates into .grad() of every requires_grad tensor reachable on the
  // tape. Throws NoTape if loss is not a scalar produced on this tape.
  void backward(const Tensor& loss);

 private:
  struct Entry {
    const char* op;
    std::function<void()> fn;
  };
  std::vector<Entry> entries_;
  std::vector<std::shared_ptr<detail::TensorData>> touched_;
};

inline void backward_grad(const Tensor& loss) { Tape::active().backward(loss); }

}  // namespace pdcp
