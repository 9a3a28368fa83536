#include "pipemaint/cql/cql.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "pipemaint/error.hpp"
#include "pipemaint/eval/evaluation.hpp"
#include "pipemaint/format.hpp"
#include "pipemaint/stats.hpp"

namespace pipemaint::cql {

namespace {

constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kInitStream = 12;
constexpr std::uint64_t kShuffleStream = 13;
constexpr std::uint64_t kDropoutStream = 14;
constexpr std::uint64_t kEvalStream = 15;

nn::Matrix stack(std::span<const OfflineSample* const> batch, bool next) {
  nn::Matrix x(batch.size(), env::kStateDim);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto& s = next ? batch[r]->next_state : batch[r]->state;
    std::copy(s.begin(), s.end(), x.row(r).begin());
  }
  return x;
}

std::vector<double> targets_for(std::span<const OfflineSample* const> batch, const nn::MlpParams& target_params,
                                double gamma) {
  const nn::Matrix q_next = nn::predict(target_params, stack(batch, true));
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto row = q_next.row(i);
    y[i] = batch[i]->done ? batch[i]->reward : batch[i]->reward + gamma * *std::max_element(row.begin(), row.end());
  }
  return y;
}

// Loss parts for a batch of Q rows; optionally fills dLoss/dQ.
LossParts evaluate_loss(const nn::Matrix& q, std::span<const OfflineSample* const> batch,
                        std::span<const double> targets, const CqlConfig& config, nn::Matrix* grad) {
  const double n = static_cast<double>(batch.size());
  LossParts parts;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto row = q.row(i);
    const auto a = static_cast<std::size_t>(batch[i]->action);
    const double err = row[a] - targets[i];
    parts.td += err * err;
    parts.penalty += conservative_penalty(row, batch[i]->action);
    if (grad != nullptr) {
      const double m = *std::max_element(row.begin(), row.end());
      double z = 0.0;
      for (const double v : row) z += std::exp(v - m);
      for (std::size_t k = 0; k < row.size(); ++k) {
        const double softmax = std::exp(row[k] - m) / z;
        (*grad)(i, k) = config.alpha * (softmax - (k == a ? 1.0 : 0.0)) / n;
      }
      (*grad)(i, a) += err / n;
    }
  }
  parts.td /= n;
  parts.penalty /= n;
  parts.total = config.alpha * parts.penalty + 0.5 * parts.td;
  return parts;
}

struct Evaluation {
  double mean = 0.0;
  double stddev = 0.0;
};

Evaluation evaluate_heldout(const nn::MlpParams& params, std::span<const env::PipeState> initial,
                            std::span<const int> pipe_ids, std::span<const std::uint64_t> seeds,
                            const env::EnvConfig& env_config) {
  const eval::GreedyModelPolicy policy("cql", params);
  const auto traces = eval::rollout_lockstep(policy, initial, pipe_ids, env_config, seeds);
  std::vector<double> returns;
  returns.reserve(traces.size());
  for (const auto& t : traces) returns.push_back(t.total_reward());
  return {mean_of(returns), stddev_of(returns)};
}

}  // namespace

void CqlConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("cql.alpha must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("cql.gamma must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("cql.learning_rate must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("cql.train_fraction must lie in (0, 1)");
  if (batch_size == 0 || target_sync_every == 0) {
    throw ConfigError("cql.batch_size and cql.target_sync_every must be positive");
  }
  network().validate();
}

nn::MlpConfig CqlConfig::network() const {
  nn::MlpConfig c;
  c.input_dim = env::kStateDim;
  c.hidden_dims = hidden_dims;
  c.output_dim = env::kActionCount;
  c.activation = activation;
  c.dropout_rate = dropout;
  return c;
}

nlohmann::json config_to_json(const CqlConfig& c) {
  return {{"algorithm", "cql"},
          {"alpha", c.alpha},
          {"gamma", c.gamma},
          {"learning_rate", c.learning_rate},
          {"dropout", c.dropout},
          {"train_fraction", c.train_fraction},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"target_sync_every", c.target_sync_every},
          {"hidden_dims", c.hidden_dims},
          {"activation", std::string(nn::activation_name(c.activation))},
          {"seed", c.seed}};
}

double conservative_penalty(std::span<const double> q_row, env::Action data_action) {
  if (q_row.size() != env::kActionCount) throw UsageError("conservative_penalty expects one value per action");
  const double m = *std::max_element(q_row.begin(), q_row.end());
  double z = 0.0;
  for (const double v : q_row) z += std::exp(v - m);
  return m + std::log(z) - q_row[static_cast<std::size_t>(data_action)];
}

std::vector<OfflineSample> make_samples(std::span<const data::TransitionRecord> records) {
  std::vector<OfflineSample> samples;
  samples.reserve(records.size());
  for (const auto& r : records) {
    samples.push_back({env::encode_state(r.state()), env::encode_state(r.next_state()),
                       env::action_from_code(r.action), r.reward, r.done});
  }
  return samples;
}

LossParts cql_loss(std::span<const OfflineSample* const> batch, const nn::MlpParams& params,
                   const nn::MlpParams& target_params, const CqlConfig& config) {
  if (batch.empty()) throw UsageError("cql_loss needs a non-empty batch");
  const auto targets = targets_for(batch, target_params, config.gamma);
  return evaluate_loss(nn::predict(params, stack(batch, false)), batch, targets, config, nullptr);
}

LossParts fit_batch(nn::MlpParams& params, const nn::MlpParams& target_params, nn::AdamState& adam,
                    std::span<const OfflineSample* const> batch, const CqlConfig& config, Rng& rng) {
  if (batch.empty()) throw UsageError("fit_batch needs a non-empty batch");
  const auto targets = targets_for(batch, target_params, config.gamma);
  const auto fwd = nn::forward(params, stack(batch, false), nn::Mode::Train, &rng);
  nn::Matrix grad(batch.size(), env::kActionCount);
  const LossParts parts = evaluate_loss(fwd.output, batch, targets, config, &grad);
  nn::adam_step(params, nn::backward(params, fwd.cache, grad), adam);
  return parts;
}

OfflineResult train_offline(const data::Dataset& dataset, const CqlConfig& config,
                            const env::EnvConfig& env_config) {
  if (dataset.records.empty()) throw UsageError("offline training needs a non-empty dataset");
  config.validate();

  Rng split_rng(derive_seed(config.seed, kSplitStream));
  const data::DatasetSplit split = data::split_dataset(dataset.records, config.train_fraction, split_rng);

  const std::vector<OfflineSample> samples = make_samples(split.train);

  // Held-out rollouts start from each test episode's logged initial state.
  std::vector<env::PipeState> initial;
  std::vector<int> pipe_ids;
  std::vector<std::uint64_t> seeds;
  for (const auto& r : split.test) {
    if (r.t != 0) continue;
    initial.push_back(r.state());
    pipe_ids.push_back(r.pipe_id);
    seeds.push_back(derive_seed(derive_seed(config.seed, kEvalStream), static_cast<std::uint64_t>(r.episode)));
  }

  Rng init_rng(derive_seed(config.seed, kInitStream));
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));

  OfflineResult result;
  result.test_episodes = split.test_episodes;
  result.params = nn::init_params(config.network(), init_rng);
  nn::MlpParams target = nn::copy_params(result.params);
  nn::AdamState adam = nn::make_adam(result.params, {.learning_rate = config.learning_rate});

  std::vector<std::size_t> order(samples.size());
  std::vector<const OfflineSample*> batch;
  batch.reserve(config.batch_size);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);
    }

    const std::uint64_t steps_before = env::thread_step_count();
    LossParts sum;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(&samples[order[k]]);
      const LossParts parts = fit_batch(result.params, target, adam, batch, config, dropout_rng);
      sum.total += parts.total;
      sum.td += parts.td;
      sum.penalty += parts.penalty;
      ++batches;
      ++result.gradient_steps;
      if (result.gradient_steps % config.target_sync_every == 0) target = nn::copy_params(result.params);
    }
    result.env_steps_during_training += env::thread_step_count() - steps_before;

    const std::uint64_t eval_before = env::thread_step_count();
    const Evaluation ev = evaluate_heldout(result.params, initial, pipe_ids, seeds, env_config);
    result.env_steps_during_evaluation += env::thread_step_count() - eval_before;

    const double nb = static_cast<double>(std::max<std::size_t>(batches, 1));
    result.log.push_back({epoch, sum.total / nb, sum.td / nb, sum.penalty / nb, ev.mean, ev.stddev});
  }
  return result;
}

double mean_dataset_q(const nn::MlpParams& params, std::span<const data::TransitionRecord> records) {
  if (records.empty()) return 0.0;
  constexpr std::size_t kChunk = 4096;
  double sum = 0.0;
  for (std::size_t start = 0; start < records.size(); start += kChunk) {
    const std::size_t end = std::min(records.size(), start + kChunk);
    nn::Matrix x(end - start, env::kStateDim);
    for (std::size_t k = start; k < end; ++k) {
      const auto e = env::encode_state(records[k].state());
      std::copy(e.begin(), e.end(), x.row(k - start).begin());
    }
    const nn::Matrix q = nn::predict(params, x);
    for (std::size_t k = start; k < end; ++k) sum += q(k - start, static_cast<std::size_t>(records[k].action));
  }
  return sum / static_cast<double>(records.size());
}

std::string epoch_log_csv(std::span<const EpochLog> log) {
  std::string text = "epoch,total_loss,td_loss,penalty,eval_return_mean,eval_return_std\n";
  for (const auto& e : log) {
    text += csv_row({std::to_string(e.epoch), format_double(e.total_loss), format_double(e.td_loss),
                     format_double(e.penalty), format_double(e.eval_return_mean), format_double(e.eval_return_std)});
  }
  return text;
}

std::vector<SourceRun> compare_sources(std::span<const data::Dataset* const> datasets, const CqlConfig& config,
                                       const env::EnvConfig& env_config) {
  if (datasets.empty()) throw UsageError("compare_sources needs at least one dataset");
  for (const auto* d : datasets) {
    if (d == nullptr || d->records.size() != datasets.front()->records.size()) {
      throw UsageError("compare_sources needs datasets of equal size");
    }
  }
  std::vector<SourceRun> runs(datasets.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(datasets.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto* d = datasets[static_cast<std::size_t>(i)];
      runs[static_cast<std::size_t>(i)] = {d->header.source_policy, train_offline(*d, config, env_config)};
    } catch (...) {
#pragma omp critical(pipemaint_cql_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return runs;
}

}  // namespace pipemaint::cql
