#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sharp/autodiff.hpp"

namespace sharp {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

/// Moment accumulators for a fixed list of parameters.
struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  AdamState() = default;
  AdamState(std::span<const ad::Var> params, AdamOptions opts = {});
};

/// One bias-corrected Adam update applied in place to `params`.
/// Throws NumericalError naming the parameter if any gradient is not finite.
void adam_step(AdamState& state, std::span<ad::Var> params, std::span<const Tensor> grads);

}  // namespace sharp
