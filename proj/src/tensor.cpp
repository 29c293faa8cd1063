#include "pdcp/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace pdcp {

namespace {
thread_local int g_no_grad_depth = 0;

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}
}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto d = std::make_shared<detail::TensorData>();
  d->v.assign(shape_numel(shape), 0.0);
  d->shape = std::move(shape);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.d_->v.begin(), t.d_->v.end(), value);
  return t;
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size())
    throw ShapeMismatch("from_vector: shape " + shape_str(shape) + " does not hold " +
                        std::to_string(data.size()) + " values");
  auto d = std::make_shared<detail::TensorData>();
  d->shape = std::move(shape);
  d->v = std::move(data);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_vector({}, {value}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw ShapeMismatch("item: tensor has " + std::to_string(size()) + " values");
  return d_->v[0];
}

Tensor make_op_output(Shape shape, bool requires_grad) {
  return Tensor::zeros(std::move(shape), requires_grad && Tape::grad_enabled());
}

Tape& Tape::active() {
  thread_local Tape tape;
  return tape;
}

bool Tape::grad_enabled() { return g_no_grad_depth == 0; }

Tape::NoGrad::NoGrad() { ++g_no_grad_depth; }
Tape::NoGrad::~NoGrad() { --g_no_grad_depth; }

void Tape::reset() {
  entries_.clear();
  touched_.clear();
}

void Tape::record(const char* op, std::vector<std::shared_ptr<detail::TensorData>> tensors,
                  std::function<void()> backward) {
  if (!grad_enabled()) return;
  for (auto& t : tensors) touched_.push_back(t);
  entries_.push_back({op, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) throw NoTape("backward: loss must be a scalar");
  if (entries_.empty()) throw NoTape("backward: tape is empty");
  bool on_tape = false;
  for (auto& t : touched_)
    if (t.get() == loss.d_.get()) on_tape = true;
  if (!on_tape) throw NoTape("backward: loss has no recorded history");

  for (auto& t : touched_) t->g.assign(t->v.size(), 0.0);
  loss.d_->g.assign(1, 1.0);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->fn();
}

}  // namespace pdcp
