#pragma once

#include <cstdint>
#include <vector>

#include "pipemaint/nn/mlp.hpp"

namespace pipemaint::nn {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::vector<Layer> first_moment;
  std::vector<Layer> second_moment;
  std::uint64_t step = 0;
};

AdamState make_adam(const MlpParams& params, AdamOptions options = {});

/// Bias-corrected Adam update, in place. Validates every gradient entry first
/// and throws NumericError naming the first non-finite one; nothing is
/// modified in that case.
void adam_step(MlpParams& params, const Gradients& grads, AdamState& state);

}  // namespace pipemaint::nn
