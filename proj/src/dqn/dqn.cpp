#include "pipemaint/dqn/dqn.hpp"

#include <algorithm>
#include <cmath>

#include "pipemaint/error.hpp"
#include "pipemaint/format.hpp"
#include "pipemaint/greedy.hpp"
#include "pipemaint/stats.hpp"

namespace pipemaint::dqn {

namespace {

constexpr std::uint64_t kEnvStream = 1;
constexpr std::uint64_t kRosterStream = 2;
constexpr std::uint64_t kPolicyStream = 3;
constexpr std::uint64_t kInitStream = 4;
constexpr std::uint64_t kReplayStream = 5;

nn::Matrix stack(std::span<const Transition* const> batch, bool next) {
  nn::Matrix x(batch.size(), env::kStateDim);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto& s = next ? batch[r]->next_state : batch[r]->state;
    std::copy(s.begin(), s.end(), x.row(r).begin());
  }
  return x;
}

}  // namespace

void DqnConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("dqn.gamma must lie in [0, 1]");
  if (!(0.0 <= epsilon_final && epsilon_final <= epsilon_start && epsilon_start <= 1.0)) {
    throw ConfigError("dqn epsilon values must satisfy 0 <= epsilon_final <= epsilon_start <= 1");
  }
  if (!(exploration_fraction >= 0.0 && exploration_fraction <= 1.0)) {
    throw ConfigError("dqn.exploration_fraction must lie in [0, 1]");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("dqn.learning_rate must be positive");
  if (buffer_size == 0 || batch_size == 0 || train_every == 0 || target_sync_every == 0) {
    throw ConfigError("dqn buffer_size, batch_size, train_every and target_sync_every must be positive");
  }
  network().validate();
}

nn::MlpConfig DqnConfig::network() const {
  nn::MlpConfig c;
  c.input_dim = env::kStateDim;
  c.hidden_dims = hidden_dims;
  c.output_dim = env::kActionCount;
  c.activation = activation;
  c.dropout_rate = 0.0;
  return c;
}

nlohmann::json config_to_json(const DqnConfig& c) {
  return {{"algorithm", "dqn"},
          {"gamma", c.gamma},
          {"learning_rate", c.learning_rate},
          {"buffer_size", c.buffer_size},
          {"epsilon_start", c.epsilon_start},
          {"epsilon_final", c.epsilon_final},
          {"exploration_fraction", c.exploration_fraction},
          {"episodes", c.episodes},
          {"steps_per_episode", env::kHorizon},
          {"batch_size", c.batch_size},
          {"train_every", c.train_every},
          {"learning_starts", c.learning_starts},
          {"target_sync_every", c.target_sync_every},
          {"hidden_dims", c.hidden_dims},
          {"activation", std::string(nn::activation_name(c.activation))},
          {"seed", c.seed}};
}

double epsilon_at(std::size_t step, const DqnConfig& config) {
  const double horizon = config.exploration_fraction * static_cast<double>(config.total_steps());
  if (horizon <= 0.0) return config.epsilon_final;
  const double progress = static_cast<double>(step) / horizon;
  if (progress >= 1.0) return config.epsilon_final;
  return config.epsilon_start + (config.epsilon_final - config.epsilon_start) * progress;
}

env::Action select_action(const nn::MlpParams& params, const env::EncodedState& state, double epsilon, Rng& rng) {
  if (rng.uniform() < epsilon) return static_cast<env::Action>(rng.below(env::kActionCount));
  const auto q = nn::predict(params, std::span<const double>(state.data(), state.size()));
  return argmax_action(q);
}

std::vector<double> td_targets(std::span<const Transition* const> batch, const nn::MlpParams& target_params,
                               double gamma) {
  if (batch.empty()) throw UsageError("td_targets needs a non-empty batch");
  const nn::Matrix q_next = nn::predict(target_params, stack(batch, true));
  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto row = q_next.row(i);
    const double best = *std::max_element(row.begin(), row.end());
    targets[i] = batch[i]->done ? batch[i]->reward : batch[i]->reward + gamma * best;
  }
  return targets;
}

double fit_batch(nn::MlpParams& params, const nn::MlpParams& target_params, nn::AdamState& adam,
                 std::span<const Transition* const> batch, double gamma) {
  const std::vector<double> targets = td_targets(batch, target_params, gamma);
  const auto fwd = nn::forward(params, stack(batch, false), nn::Mode::Train);

  const double n = static_cast<double>(batch.size());
  nn::Matrix grad(batch.size(), env::kActionCount);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto a = static_cast<std::size_t>(batch[i]->action);
    const double err = fwd.output(i, a) - targets[i];
    loss += err * err;
    grad(i, a) = 2.0 * err / n;
  }
  const nn::Gradients grads = nn::backward(params, fwd.cache, grad);
  nn::adam_step(params, grads, adam);
  return loss / n;
}

double train_step(nn::MlpParams& params, const nn::MlpParams& target_params, nn::AdamState& adam,
                  const ReplayBuffer& buffer, const DqnConfig& config, Rng& rng) {
  if (buffer.size() < std::max(config.learning_starts, config.batch_size)) {
    throw UsageError("train_step called before learning_starts transitions were collected");
  }
  std::vector<const Transition*> batch(config.batch_size);
  for (auto& t : batch) t = &buffer.at(buffer.sample_index(rng));
  return fit_batch(params, target_params, adam, batch, config.gamma);
}

TrainingResult train(std::span<const env::PipeSpec> roster, const DqnConfig& config,
                     const env::EnvConfig& env_config, const TransitionSink& sink) {
  if (roster.empty()) throw UsageError("DQN training needs a non-empty roster");
  config.validate();

  Rng init_rng(derive_seed(config.seed, kInitStream));
  Rng roster_rng(derive_seed(config.seed, kRosterStream));
  Rng policy_rng(derive_seed(config.seed, kPolicyStream));
  Rng replay_rng(derive_seed(config.seed, kReplayStream));
  env::Environment environment(env_config, derive_seed(config.seed, kEnvStream));

  TrainingResult result;
  result.params = nn::init_params(config.network(), init_rng);
  nn::MlpParams target = nn::copy_params(result.params);
  nn::AdamState adam = make_adam(result.params, {.learning_rate = config.learning_rate});
  ReplayBuffer buffer(config.buffer_size);

  std::vector<double> returns;
  returns.reserve(config.episodes);
  std::size_t step = 0;
  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    const env::PipeSpec& spec = roster[roster_rng.below(roster.size())];
    environment.reset(spec);

    double episode_return = 0.0;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double epsilon = config.epsilon_start;
    while (!environment.done()) {
      const env::PipeState state = environment.state();
      const env::EncodedState encoded = env::encode_state(state);
      epsilon = epsilon_at(step, config);
      const env::Action action = select_action(result.params, encoded, epsilon, policy_rng);
      const env::StepOutcome outcome = environment.step(action);
      episode_return += outcome.reward;

      buffer.push(Transition{encoded, action, outcome.reward, env::encode_state(outcome.next_state), outcome.done,
                             state, outcome.next_state});
      if (sink) sink(data::make_record(static_cast<int>(ep), spec.id, state, action, outcome));
      ++step;

      if (step >= config.learning_starts && step % config.train_every == 0) {
        loss_sum += train_step(result.params, target, adam, buffer, config, replay_rng);
        ++loss_count;
        ++result.gradient_steps;
      }
      if (step % config.target_sync_every == 0) {
        target = nn::copy_params(result.params);
        ++result.target_syncs;
      }
    }

    returns.push_back(episode_return);
    const WindowStats window = trailing_window(returns, ep, kRollingWindow);
    EpisodeLog entry;
    entry.episode = ep;
    entry.episode_return = episode_return;
    entry.rolling_mean = window.mean;
    entry.rolling_std = window.stddev;
    entry.epsilon = epsilon;
    if (loss_count > 0) entry.loss_mean = loss_sum / static_cast<double>(loss_count);
    result.log.push_back(entry);
  }
  result.env_steps = step;
  return result;
}

std::string training_log_csv(std::span<const EpisodeLog> log) {
  std::string text = "episode,return,rolling_mean_20,rolling_std_20,epsilon,loss_mean\n";
  for (const auto& e : log) {
    text += csv_row({std::to_string(e.episode), format_double(e.episode_return), format_double(e.rolling_mean),
                     format_double(e.rolling_std), format_double(e.epsilon), format_optional(e.loss_mean)});
  }
  return text;
}

}  // namespace pipemaint::dqn
