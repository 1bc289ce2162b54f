#include "gfairhint/optim.hpp"

#include <cmath>

#include "gfairhint/error.hpp"

namespace gfairhint {

void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
  if (!param.same_shape(grad))
    throw ShapeError("adam: parameter " + param.shape_str() + " vs gradient " +
                     grad.shape_str());
  for (double g : grad.data())
    if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient");
  if (state.m.empty()) {
    state.m = Tensor(param.shape());
    state.v = Tensor(param.shape());
  }
  state.step += 1;
  const AdamConfig& c = state.cfg;
  double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    double g = grad[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    param[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace gfairhint
