#include "pipemaint/greedy.hpp"

#include <algorithm>

#include "pipemaint/error.hpp"

namespace pipemaint {

env::Action argmax_action(std::span<const double> q_values) {
  if (q_values.size() != env::kActionCount) throw UsageError("expected one Q-value per action");
  std::size_t best = 0;
  for (std::size_t a = 1; a < q_values.size(); ++a) {
    if (q_values[a] > q_values[best]) best = a;
  }
  return static_cast<env::Action>(best);
}

nn::Matrix encode_batch(std::span<const env::PipeState> states) {
  nn::Matrix x(states.size(), env::kStateDim);
  for (std::size_t r = 0; r < states.size(); ++r) {
    const auto e = env::encode_state(states[r]);
    std::copy(e.begin(), e.end(), x.row(r).begin());
  }
  return x;
}

std::vector<env::Action> greedy_actions(const nn::MlpParams& params, std::span<const env::PipeState> states) {
  std::vector<env::Action> actions;
  if (states.empty()) return actions;
  const nn::Matrix q = nn::predict(params, encode_batch(states));
  actions.reserve(states.size());
  for (std::size_t r = 0; r < q.rows; ++r) actions.push_back(argmax_action(q.row(r)));
  return actions;
}

env::Action greedy_action(const nn::MlpParams& params, const env::PipeState& state) {
  return greedy_actions(params, std::span<const env::PipeState>(&state, 1)).front();
}

}  // namespace pipemaint
