#pragma once

// Policy rollouts over the pipe roster and the comparison metrics.
//
// Every rollout owns two random streams derived from (master seed, pipe id,
// episode): one for the simulator and one for the policy. Results therefore do
// not depend on how rollouts are scheduled, and the parallel evaluator agrees
// exactly with the one-rollout-at-a-time reference.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pipemaint/baselines/baselines.hpp"
#include "pipemaint/env/deterioration.hpp"
#include "pipemaint/nn/mlp.hpp"
#include "pipemaint/rng.hpp"

namespace pipemaint::eval {

/// Batched decision interface; element i of `rngs` belongs to state i.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void act(std::span<const env::PipeState> states, std::span<Rng> rngs,
                   std::span<env::Action> actions) const = 0;
};

class BaselinePolicy final : public Policy {
 public:
  explicit BaselinePolicy(baselines::BaselineKind kind,
                          baselines::ScheduleAnchor anchor = baselines::ScheduleAnchor::Calendar)
      : kind_(kind), anchor_(anchor) {}

  std::string name() const override;
  void act(std::span<const env::PipeState> states, std::span<Rng> rngs,
           std::span<env::Action> actions) const override;

 private:
  baselines::BaselineKind kind_;
  baselines::ScheduleAnchor anchor_;
};

/// Acts greedily on a trained Q-network (no exploration, no dropout).
class GreedyModelPolicy final : public Policy {
 public:
  GreedyModelPolicy(std::string name, nn::MlpParams params) : name_(std::move(name)), params_(std::move(params)) {}

  std::string name() const override { return name_; }
  void act(std::span<const env::PipeState> states, std::span<Rng> rngs,
           std::span<env::Action> actions) const override;

 private:
  std::string name_;
  nn::MlpParams params_;
};

struct StepRecord {
  env::PipeState state;
  env::Action chosen = env::Action::DoNothing;
  env::Action executed = env::Action::DoNothing;
  double reward = 0.0;
  double mc = 0.0;
  double pf_penalty = 0.0;
  bool sudden_failure = false;

  bool operator==(const StepRecord&) const = default;
};

struct EpisodeTrace {
  int pipe_id = 0;
  std::vector<StepRecord> steps;

  double total_reward() const;
  bool operator==(const EpisodeTrace&) const = default;
};

/// Simulator seed for one (pipe, episode) rollout.
std::uint64_t rollout_seed(std::uint64_t master_seed, int pipe_id, std::size_t episode);

/// One full episode from reset(spec), seeded with `seed`.
EpisodeTrace rollout(const Policy& policy, const env::PipeSpec& spec, const env::EnvConfig& env_config,
                     std::uint64_t seed);

/// Runs many episodes in lockstep so the policy sees one batch per timestep.
/// Element i starts from initial_states[i] (t is reset to 0) with seeds[i].
std::vector<EpisodeTrace> rollout_lockstep(const Policy& policy, std::span<const env::PipeState> initial_states,
                                           std::span<const int> pipe_ids, const env::EnvConfig& env_config,
                                           std::span<const std::uint64_t> seeds);

/// 0.5 per executed maintain and 0.8 per executed replace, sudden failures
/// included; penalty branches and the -pf term are not counted.
double intervention_cost(const EpisodeTrace& trace);

struct ActionCounts {
  std::uint64_t do_nothing = 0;
  std::uint64_t maintain = 0;
  std::uint64_t replace = 0;

  std::uint64_t total() const { return do_nothing + maintain + replace; }
  void add(env::Action a);
  bool operator==(const ActionCounts&) const = default;
};

struct PipeReport {
  int pipe_id = 0;
  std::size_t episodes = 0;
  double avg_cost = 0.0;
  double avg_pf = 0.0;
  ActionCounts counts;

  bool operator==(const PipeReport&) const = default;
};

struct PolicyReport {
  std::string policy;
  std::size_t pipes = 0;
  std::size_t episodes_per_pipe = 0;
  /// Mean over pipes of the mean per-episode intervention cost.
  double avg_intervention_cost = 0.0;
  /// Time-average of the observed pf over all steps, episodes and pipes.
  double avg_pf = 0.0;
  /// Executed actions over all rollouts.
  ActionCounts counts;
  /// Executed replaces per pipe per planning horizon.
  double replace_per_pipe = 0.0;
  /// (1 - avg_pf) / avg_intervention_cost; absent when the cost is zero.
  std::optional<double> cost_effectiveness;
  std::vector<PipeReport> per_pipe;

  bool operator==(const PolicyReport&) const = default;
};

/// Parallel over pipes (OpenMP), lockstep over each pipe's episodes.
PolicyReport evaluate_policy(const Policy& policy, std::span<const env::PipeSpec> roster,
                             std::size_t episodes_per_pipe, const env::EnvConfig& env_config,
                             std::uint64_t seed);

/// Reference implementation: one rollout at a time, in roster order.
PolicyReport evaluate_policy_serial(const Policy& policy, std::span<const env::PipeSpec> roster,
                                    std::size_t episodes_per_pipe, const env::EnvConfig& env_config,
                                    std::uint64_t seed);

struct Comparison {
  std::string metrics_csv;
  std::string perpipe_csv;
  std::string plotdata_csv;
};

/// Needs at least two reports.
Comparison compare(std::span<const PolicyReport> reports);
/// Same tables without the two-report minimum.
Comparison render_reports(std::span<const PolicyReport> reports);

/// Writes metrics.csv, perpipe.csv and plotdata.csv into `out_dir`.
void write_comparison(const Comparison& comparison, const std::string& out_dir);

}  // namespace pipemaint::eval
