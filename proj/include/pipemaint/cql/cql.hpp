#pragma once

// Discrete conservative Q-learning from a fixed transition dataset.
//
// The loss adds alpha * (logsumexp_a Q(s, a) - Q(s, a_data)) to half the
// squared TD error, pushing down the values of actions the dataset does not
// support. Training touches dataset records only; the simulator is used
// solely for the held-out rollouts after each epoch.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pipemaint/data/dataset.hpp"
#include "pipemaint/env/deterioration.hpp"
#include "pipemaint/nn/adam.hpp"
#include "pipemaint/nn/mlp.hpp"

namespace pipemaint::cql {

struct CqlConfig {
  double alpha = 1.0;
  double gamma = 0.99;
  double learning_rate = 1e-4;
  double dropout = 0.1;
  double train_fraction = 0.8;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  /// Gradient steps between target-network syncs.
  std::size_t target_sync_every = 1000;
  std::vector<std::size_t> hidden_dims{64, 64};
  nn::Activation activation = nn::Activation::ReLU;
  std::uint64_t seed = 0;

  void validate() const;
  nn::MlpConfig network() const;
};

nlohmann::json config_to_json(const CqlConfig& config);

/// logsumexp(q_row) - q_row[data_action], evaluated with a max shift.
double conservative_penalty(std::span<const double> q_row, env::Action data_action);

/// A dataset record pre-encoded for the network.
struct OfflineSample {
  env::EncodedState state{};
  env::EncodedState next_state{};
  env::Action action = env::Action::DoNothing;
  double reward = 0.0;
  bool done = false;
};

std::vector<OfflineSample> make_samples(std::span<const data::TransitionRecord> records);

struct LossParts {
  double total = 0.0;
  double td = 0.0;
  double penalty = 0.0;
};

/// Loss of `params` on a batch in eval mode; does not update anything.
/// td is the mean squared TD error; total = alpha * penalty + td / 2.
LossParts cql_loss(std::span<const OfflineSample* const> batch, const nn::MlpParams& params,
                   const nn::MlpParams& target_params, const CqlConfig& config);

/// One Adam step on the CQL loss with dropout active; returns the loss parts
/// of the forward pass used for the gradient.
LossParts fit_batch(nn::MlpParams& params, const nn::MlpParams& target_params, nn::AdamState& adam,
                    std::span<const OfflineSample* const> batch, const CqlConfig& config, Rng& rng);

struct EpochLog {
  std::size_t epoch = 0;
  double total_loss = 0.0;
  double td_loss = 0.0;
  double penalty = 0.0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;

  bool operator==(const EpochLog&) const = default;
};

struct OfflineResult {
  nn::MlpParams params;
  std::vector<EpochLog> log;
  std::vector<int> test_episodes;
  std::size_t gradient_steps = 0;
  /// Simulator steps observed while gradients were being computed. Always 0.
  std::uint64_t env_steps_during_training = 0;
  /// Simulator steps spent on held-out evaluation rollouts.
  std::uint64_t env_steps_during_evaluation = 0;
};

/// Splits the dataset by episode, trains for config.epochs and after every
/// epoch rolls the greedy policy out from each held-out episode's initial
/// state. Held-out rollouts reuse the same seeds every epoch.
OfflineResult train_offline(const data::Dataset& dataset, const CqlConfig& config,
                            const env::EnvConfig& env_config);

/// Mean of Q(s, a) over the (state, logged action) pairs of `records`.
double mean_dataset_q(const nn::MlpParams& params, std::span<const data::TransitionRecord> records);

/// `epoch,total_loss,td_loss,penalty,eval_return_mean,eval_return_std`.
std::string epoch_log_csv(std::span<const EpochLog> log);

struct SourceRun {
  data::SourcePolicy source = data::SourcePolicy::Random;
  OfflineResult result;
};

/// Trains one agent per dataset with identical config and seed. Datasets
/// must be the same size. Runs are independent and may execute concurrently.
std::vector<SourceRun> compare_sources(std::span<const data::Dataset* const> datasets, const CqlConfig& config,
                                       const env::EnvConfig& env_config);

}  // namespace pipemaint::cql
