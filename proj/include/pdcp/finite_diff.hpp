#pragma once

#include <functional>
#include <vector>

#include "pdcp/tensor.hpp"

namespace pdcp {

// Central-difference gradient verification. f must be a deterministic scalar
// function of the given parameter tensors (close over fixed rng seeds).
// Returns max over all parameter elements of
//   |analytic - central| / max(1, |central|).
// Throws InvalidArgument for step <= 0, NonFinite if f diverges at a
// perturbed point.
double finite_diff_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                         double step);

}  // namespace pdcp
