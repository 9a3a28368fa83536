#pragma once

// Online deep Q-learning: epsilon-greedy exploration, uniform experience
// replay and a periodically synchronized target network.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pipemaint/data/dataset.hpp"
#include "pipemaint/dqn/replay_buffer.hpp"
#include "pipemaint/env/deterioration.hpp"
#include "pipemaint/nn/adam.hpp"
#include "pipemaint/nn/mlp.hpp"

namespace pipemaint::dqn {

struct DqnConfig {
  double gamma = 0.99;
  double learning_rate = 1e-4;
  std::size_t buffer_size = 50'000;
  double epsilon_start = 1.0;
  double epsilon_final = 0.1;
  /// Share of all training steps over which epsilon anneals linearly.
  double exploration_fraction = 0.1;
  std::size_t episodes = 1000;
  std::size_t batch_size = 32;
  std::size_t train_every = 4;
  std::size_t learning_starts = 1000;
  std::size_t target_sync_every = 1000;
  std::vector<std::size_t> hidden_dims{64, 64};
  nn::Activation activation = nn::Activation::ReLU;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t total_steps() const { return episodes * env::kHorizon; }
  nn::MlpConfig network() const;
};

nlohmann::json config_to_json(const DqnConfig& config);

double epsilon_at(std::size_t step, const DqnConfig& config);

/// Epsilon-greedy choice. Always consumes one uniform draw, plus one more
/// when exploring.
env::Action select_action(const nn::MlpParams& params, const env::EncodedState& state, double epsilon, Rng& rng);

/// r for terminal transitions, r + gamma * max_a Q_target(s', a) otherwise.
std::vector<double> td_targets(std::span<const Transition* const> batch, const nn::MlpParams& target_params,
                               double gamma);

/// One Adam step on the mean squared TD error of the given batch, through the
/// taken action's head only. Returns the loss before the update.
double fit_batch(nn::MlpParams& params, const nn::MlpParams& target_params, nn::AdamState& adam,
                 std::span<const Transition* const> batch, double gamma);

/// Samples a uniform minibatch and calls fit_batch. Throws UsageError while
/// the buffer holds fewer than max(learning_starts, batch_size) transitions.
double train_step(nn::MlpParams& params, const nn::MlpParams& target_params, nn::AdamState& adam,
                  const ReplayBuffer& buffer, const DqnConfig& config, Rng& rng);

struct EpisodeLog {
  std::size_t episode = 0;
  double episode_return = 0.0;
  double rolling_mean = 0.0;
  double rolling_std = 0.0;
  double epsilon = 0.0;
  std::optional<double> loss_mean;

  bool operator==(const EpisodeLog&) const = default;
};

struct TrainingResult {
  nn::MlpParams params;
  std::vector<EpisodeLog> log;
  std::size_t env_steps = 0;
  std::size_t gradient_steps = 0;
  std::size_t target_syncs = 0;
};

/// Receives every logged environment step, e.g. to build the near-expert dataset.
using TransitionSink = std::function<void(const data::TransitionRecord&)>;

/// Window used for the rolling statistics in the training log.
inline constexpr std::size_t kRollingWindow = 20;

TrainingResult train(std::span<const env::PipeSpec> roster, const DqnConfig& config,
                     const env::EnvConfig& env_config, const TransitionSink& sink = {});

/// `episode,return,rolling_mean_20,rolling_std_20,epsilon,loss_mean`.
std::string training_log_csv(std::span<const EpisodeLog> log);

}  // namespace pipemaint::dqn
