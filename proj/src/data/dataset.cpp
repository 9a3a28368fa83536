#include "pipemaint/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "json.hpp"
#include "pipemaint/env/roster.hpp"
#include "pipemaint/error.hpp"
#include "pipemaint/greedy.hpp"

namespace pipemaint::data {

using ojson = nlohmann::ordered_json;

namespace {

constexpr double kInvariantTolerance = 1e-9;

// Stream identifiers for derive_seed.
constexpr std::uint64_t kEnvStream = 1;
constexpr std::uint64_t kRosterStream = 2;
constexpr std::uint64_t kPolicyStream = 3;

std::string record_error(std::size_t index, const std::string& what) {
  return "dataset record " + std::to_string(index) + ": " + what;
}

}  // namespace

std::string_view source_policy_name(SourcePolicy source) {
  switch (source) {
    case SourcePolicy::Random: return "random";
    case SourcePolicy::NearExpert: return "near_expert";
    case SourcePolicy::Expert: return "expert";
  }
  return "random";
}

SourcePolicy parse_source_policy(std::string_view name) {
  if (name == "random") return SourcePolicy::Random;
  if (name == "near_expert" || name == "near-expert") return SourcePolicy::NearExpert;
  if (name == "expert") return SourcePolicy::Expert;
  throw UsageError("unknown source policy '" + std::string(name) + "' (random|near_expert|expert)");
}

env::PipeState TransitionRecord::state() const { return {age, material, lambda_eff, t}; }
env::PipeState TransitionRecord::next_state() const { return {next_age, material, lambda_eff, t + 1}; }

TransitionRecord make_record(int episode, int pipe_id, const env::PipeState& state, env::Action chosen,
                             const env::StepOutcome& outcome) {
  TransitionRecord r;
  r.episode = episode;
  r.t = state.t();
  r.pipe_id = pipe_id;
  r.age = state.age();
  r.material = state.material();
  r.lambda_eff = state.lambda_eff();
  r.pf = state.pf();
  r.action = env::action_code(chosen);
  r.reward = outcome.reward;
  r.mc = outcome.mc;
  r.next_age = outcome.next_state.age();
  r.next_pf = outcome.next_state.pf();
  r.done = outcome.done;
  r.sudden_failure = outcome.sudden_failure;
  return r;
}

void validate_record(const TransitionRecord& r, std::size_t index) {
  if (r.t < 0 || r.t >= env::kHorizon) throw LoadError(record_error(index, "t outside [0, 99]"));
  if (r.done != (r.t == env::kHorizon - 1)) throw LoadError(record_error(index, "done flag must be set exactly at t = 99"));
  if (r.action < 0 || r.action > 2) throw LoadError(record_error(index, "action code not in {0,1,2}"));
  if (r.age < 0 || r.next_age < 0) throw LoadError(record_error(index, "negative age"));
  if (!(r.lambda_eff > 0.0) || !std::isfinite(r.lambda_eff)) {
    throw LoadError(record_error(index, "lambda_eff must be positive"));
  }
  if (std::abs(r.pf - env::failure_probability(r.lambda_eff, r.age)) > kInvariantTolerance) {
    throw LoadError(record_error(index, "pf inconsistent with age and lambda_eff"));
  }
  if (std::abs(r.next_pf - env::failure_probability(r.lambda_eff, r.next_age)) > kInvariantTolerance) {
    throw LoadError(record_error(index, "next_pf inconsistent with next_age and lambda_eff"));
  }
  const double charged_pf = r.sudden_failure ? 1.0 : r.pf;
  if (std::abs(r.reward - (r.mc - charged_pf)) > kInvariantTolerance) {
    throw LoadError(record_error(index, "reward differs from mc - pf"));
  }
}

std::string header_to_line(const DatasetHeader& h) {
  ojson j;
  j["format_version"] = h.format_version;
  j["source_policy"] = std::string(source_policy_name(h.source_policy));
  j["episodes"] = h.episodes;
  j["steps_per_episode"] = h.steps_per_episode;
  j["seed"] = h.seed;
  j["roster_checksum"] = h.roster_checksum;
  return j.dump() + "\n";
}

std::string record_to_line(const TransitionRecord& r) {
  ojson j;
  j["episode"] = r.episode;
  j["t"] = r.t;
  j["pipe_id"] = r.pipe_id;
  j["age"] = r.age;
  j["material"] = std::string(env::material_name(r.material));
  j["lambda_eff"] = r.lambda_eff;
  j["pf"] = r.pf;
  j["action"] = r.action;
  j["reward"] = r.reward;
  j["mc"] = r.mc;
  j["next_age"] = r.next_age;
  j["next_pf"] = r.next_pf;
  j["done"] = r.done;
  j["sudden_failure"] = r.sudden_failure;
  return j.dump() + "\n";
}

namespace {

DatasetHeader parse_header(const std::string& line) {
  try {
    const auto j = ojson::parse(line);
    DatasetHeader h;
    h.format_version = j.at("format_version").get<int>();
    if (h.format_version != kDatasetFormatVersion) {
      throw LoadError("unsupported dataset format_version " + std::to_string(h.format_version));
    }
    h.source_policy = parse_source_policy(j.at("source_policy").get<std::string>());
    h.episodes = j.at("episodes").get<std::size_t>();
    h.steps_per_episode = j.at("steps_per_episode").get<int>();
    h.seed = j.at("seed").get<std::uint64_t>();
    h.roster_checksum = j.at("roster_checksum").get<std::string>();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed dataset header: ") + e.what());
  } catch (const UsageError& e) {
    throw LoadError(std::string("malformed dataset header: ") + e.what());
  }
}

TransitionRecord parse_record(const std::string& line, std::size_t index) {
  try {
    const auto j = ojson::parse(line);
    TransitionRecord r;
    r.episode = j.at("episode").get<int>();
    r.t = j.at("t").get<int>();
    r.pipe_id = j.at("pipe_id").get<int>();
    r.age = j.at("age").get<int>();
    r.material = env::parse_material(j.at("material").get<std::string>());
    r.lambda_eff = j.at("lambda_eff").get<double>();
    r.pf = j.at("pf").get<double>();
    r.action = j.at("action").get<int>();
    r.reward = j.at("reward").get<double>();
    r.mc = j.at("mc").get<double>();
    r.next_age = j.at("next_age").get<int>();
    r.next_pf = j.at("next_pf").get<double>();
    r.done = j.at("done").get<bool>();
    r.sudden_failure = j.at("sudden_failure").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(record_error(index, e.what()));
  } catch (const ParseError& e) {
    throw LoadError(record_error(index, e.what()));
  }
}

std::size_t expected_count(const DatasetHeader& h) {
  return h.episodes * static_cast<std::size_t>(std::max(h.steps_per_episode, 0));
}

}  // namespace

void write_dataset(const Dataset& dataset, const std::string& path) {
  DatasetWriter writer(path, dataset.header);
  for (const auto& r : dataset.records) writer.append(r);
  writer.close();
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw LoadError("dataset '" + path + "' is empty");

  Dataset dataset;
  dataset.header = parse_header(line);
  if (dataset.header.steps_per_episode != env::kHorizon) {
    throw LoadError("dataset steps_per_episode must be " + std::to_string(env::kHorizon));
  }
  const std::size_t expected = expected_count(dataset.header);
  dataset.records.reserve(expected);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t index = dataset.records.size();
    TransitionRecord r = parse_record(line, index);
    validate_record(r, index);
    if (r.episode < 0 || static_cast<std::size_t>(r.episode) >= dataset.header.episodes) {
      throw LoadError(record_error(index, "episode index outside the header's episode count"));
    }
    dataset.records.push_back(r);
  }
  if (dataset.records.size() != expected) {
    throw LoadError("dataset count mismatch: header declares " + std::to_string(expected) +
                    " records, file holds " + std::to_string(dataset.records.size()));
  }
  return dataset;
}

DatasetWriter::DatasetWriter(const std::string& path, const DatasetHeader& header)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path), header_(header) {
  if (!out_) throw UsageError("cannot open dataset '" + path + "' for writing");
  out_ << header_to_line(header_);
}

void DatasetWriter::append(const TransitionRecord& record) {
  out_ << record_to_line(record);
  ++written_;
}

void DatasetWriter::close() {
  out_.flush();
  if (!out_) throw UsageError("writing dataset '" + path_ + "' failed");
  out_.close();
  if (written_ != expected_count(header_)) {
    throw UsageError("dataset '" + path_ + "' received " + std::to_string(written_) + " records, header declares " +
                     std::to_string(expected_count(header_)));
  }
}

DatasetSplit split_dataset(std::span<const TransitionRecord> records, double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("train_fraction must lie in (0, 1)");

  std::vector<int> episodes;
  episodes.reserve(records.size() / env::kHorizon + 1);
  for (const auto& r : records) episodes.push_back(r.episode);
  std::sort(episodes.begin(), episodes.end());
  episodes.erase(std::unique(episodes.begin(), episodes.end()), episodes.end());
  if (episodes.size() < 2) throw UsageError("splitting needs at least two episodes");

  for (std::size_t i = episodes.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(episodes[i], episodes[j]);
  }
  auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(episodes.size()) * train_fraction));
  n_train = std::clamp<std::size_t>(n_train, 1, episodes.size() - 1);

  DatasetSplit split;
  split.train_episodes.assign(episodes.begin(), episodes.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_episodes.assign(episodes.begin() + static_cast<std::ptrdiff_t>(n_train), episodes.end());
  std::sort(split.train_episodes.begin(), split.train_episodes.end());
  std::sort(split.test_episodes.begin(), split.test_episodes.end());
  for (const auto& r : records) {
    const bool in_train = std::binary_search(split.train_episodes.begin(), split.train_episodes.end(), r.episode);
    (in_train ? split.train : split.test).push_back(r);
  }
  return split;
}

Dataset collect(SourcePolicy source, const nn::MlpParams* model, std::span<const env::PipeSpec> roster,
                std::size_t episodes, const env::EnvConfig& env_config, std::uint64_t seed) {
  if (roster.empty()) throw UsageError("collect needs a non-empty roster");
  if (source == SourcePolicy::NearExpert) {
    throw UsageError("near-expert datasets are logged during DQN training, not collected");
  }
  if (source == SourcePolicy::Expert && model == nullptr) {
    throw UsageError("expert collection needs a trained model");
  }

  Dataset dataset;
  dataset.header.source_policy = source;
  dataset.header.episodes = episodes;
  dataset.header.seed = seed;
  dataset.header.roster_checksum = env::roster_checksum(roster);
  dataset.records.reserve(episodes * env::kHorizon);

  env::Environment environment(env_config, derive_seed(seed, kEnvStream));
  Rng roster_rng(derive_seed(seed, kRosterStream));
  Rng policy_rng(derive_seed(seed, kPolicyStream));
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    const env::PipeSpec& spec = roster[roster_rng.below(roster.size())];
    environment.reset(spec);
    while (!environment.done()) {
      const env::PipeState state = environment.state();
      const env::Action action = source == SourcePolicy::Random
                                     ? static_cast<env::Action>(policy_rng.below(env::kActionCount))
                                     : greedy_action(*model, state);
      const env::StepOutcome outcome = environment.step(action);
      dataset.records.push_back(make_record(static_cast<int>(ep), spec.id, state, action, outcome));
    }
  }
  return dataset;
}

}  // namespace pipemaint::data
