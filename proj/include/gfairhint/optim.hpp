#pragma once

#include <cstddef>
#include <string>

#include "gfairhint/tensor.hpp"

namespace gfairhint {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter Adam accumulators; moments allocate on the first step.
struct AdamState {
  AdamConfig cfg;
  Tensor m;
  Tensor v;
  std::size_t step = 0;
};

// Bias-corrected Adam update in place. Throws ShapeError on shape mismatch
// and NumericError if the gradient contains NaN/Inf.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state);

// A trainable tensor living outside any tape; re-registered on each
// forward pass and updated from the tape's gradient afterwards.
struct Parameter {
  std::string name;
  Tensor value;
  AdamState adam;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {}

  void apply(const Tensor& grad) { adam_step(value, grad, adam); }
};

}  // namespace gfairhint
