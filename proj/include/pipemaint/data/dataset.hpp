#pragma once

// Logged transition datasets.
//
// On disk a dataset is JSON Lines: the first line is the header object, every
// following line one transition record. Doubles are written in shortest
// round-trip form, so write/read is value-exact.

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pipemaint/env/deterioration.hpp"
#include "pipemaint/nn/mlp.hpp"
#include "pipemaint/rng.hpp"

namespace pipemaint::data {

inline constexpr int kDatasetFormatVersion = 1;

enum class SourcePolicy : std::uint8_t { Random, NearExpert, Expert };

std::string_view source_policy_name(SourcePolicy source);
/// Accepts "random", "near_expert", "expert" (and "near-expert").
SourcePolicy parse_source_policy(std::string_view name);

struct DatasetHeader {
  int format_version = kDatasetFormatVersion;
  SourcePolicy source_policy = SourcePolicy::Random;
  std::size_t episodes = 0;
  int steps_per_episode = env::kHorizon;
  std::uint64_t seed = 0;
  std::string roster_checksum;

  bool operator==(const DatasetHeader&) const = default;
};

/// One logged step. `action` is the agent's decision; when `sudden_failure`
/// is set the simulator executed a replace instead and charged pf = 1.
struct TransitionRecord {
  int episode = 0;
  int t = 0;
  int pipe_id = 0;
  int age = 0;
  env::Material material = env::Material::PVC;
  double lambda_eff = 0.0;
  double pf = 0.0;
  int action = 0;
  double reward = 0.0;
  double mc = 0.0;
  int next_age = 0;
  double next_pf = 0.0;
  bool done = false;
  bool sudden_failure = false;

  env::PipeState state() const;
  env::PipeState next_state() const;

  bool operator==(const TransitionRecord&) const = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<TransitionRecord> records;
};

TransitionRecord make_record(int episode, int pipe_id, const env::PipeState& state, env::Action chosen,
                             const env::StepOutcome& outcome);

/// Checks the per-record invariants (timestep range, done flag, reward
/// decomposition, pf consistency). Throws LoadError naming `index`.
void validate_record(const TransitionRecord& record, std::size_t index);

std::string header_to_line(const DatasetHeader& header);
std::string record_to_line(const TransitionRecord& record);

/// Throws UsageError if the header count disagrees with the records.
void write_dataset(const Dataset& dataset, const std::string& path);
/// Validates version, every record and the header count; throws LoadError.
Dataset read_dataset(const std::string& path);

/// Appends records to a dataset file as they are produced.
class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, const DatasetHeader& header);
  void append(const TransitionRecord& record);
  /// Flushes and checks the record count against the header.
  void close();
  std::size_t written() const { return written_; }

 private:
  std::ofstream out_;
  std::string path_;
  DatasetHeader header_;
  std::size_t written_ = 0;
};

struct DatasetSplit {
  std::vector<int> train_episodes;
  std::vector<int> test_episodes;
  std::vector<TransitionRecord> train;
  std::vector<TransitionRecord> test;
};

/// Shuffles whole episodes and assigns floor(n * train_fraction) of them
/// (clamped to [1, n-1]) to the training side. Records keep their order
/// within each side. Throws UsageError for fewer than two episodes.
DatasetSplit split_dataset(std::span<const TransitionRecord> records, double train_fraction, Rng& rng);

/// Rolls out a behaviour policy over uniformly sampled roster pipes.
/// Random draws uniform actions; Expert acts greedily with `model`, which is
/// required. NearExpert datasets are produced by online DQN training instead.
Dataset collect(SourcePolicy source, const nn::MlpParams* model, std::span<const env::PipeSpec> roster,
                std::size_t episodes, const env::EnvConfig& env_config, std::uint64_t seed);

}  // namespace pipemaint::data
