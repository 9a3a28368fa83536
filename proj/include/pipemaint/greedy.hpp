#pragma once

#include <span>
#include <vector>

#include "pipemaint/env/deterioration.hpp"
#include "pipemaint/nn/mlp.hpp"

namespace pipemaint {

/// Index of the largest value; ties go to the lowest action code.
env::Action argmax_action(std::span<const double> q_values);

/// Greedy (eval-mode) actions for a batch of states in one forward pass.
std::vector<env::Action> greedy_actions(const nn::MlpParams& params, std::span<const env::PipeState> states);

env::Action greedy_action(const nn::MlpParams& params, const env::PipeState& state);

/// Stacks encoded states into a batch x kStateDim matrix.
nn::Matrix encode_batch(std::span<const env::PipeState> states);

}  // namespace pipemaint
