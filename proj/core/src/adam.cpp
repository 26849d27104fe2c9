#include "sharp/adam.hpp"

#include <cmath>
#include <string>

namespace sharp {

AdamState::AdamState(std::span<const ad::Var> params, AdamOptions opts) : options(opts) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.shape());
    second_moment.emplace_back(p.shape());
  }
}

void adam_step(AdamState& state, std::span<ad::Var> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.first_moment.size()) + " accumulators");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].shape() || state.first_moment[i].shape() != params[i].shape()) {
      throw ShapeError("adam_step: gradient/accumulator shape mismatch for parameter '" +
                       params[i].name() + "' " + to_string(params[i].shape()));
    }
    if (!grads[i].all_finite()) {
      throw NumericalError("adam_step: non-finite gradient for parameter '" + params[i].name() + "'");
    }
  }

  const auto& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value_mut().data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      value[j] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace sharp
