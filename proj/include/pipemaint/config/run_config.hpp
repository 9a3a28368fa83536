#pragma once

// Everything a pipeline run can be configured with, addressable by dotted
// key ("dqn.gamma"). Built-in defaults are overridden by a TOML file, which
// is overridden by command-line values.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pipemaint/baselines/baselines.hpp"
#include "pipemaint/config/toml.hpp"
#include "pipemaint/cql/cql.hpp"
#include "pipemaint/dqn/dqn.hpp"
#include "pipemaint/env/deterioration.hpp"

namespace pipemaint::config {

struct EvalSettings {
  std::size_t episodes_per_pipe = 30;
  baselines::ScheduleAnchor schedule_anchor = baselines::ScheduleAnchor::Calendar;
};

struct CollectSettings {
  std::size_t episodes = 1000;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string roster = "data/pipes.csv";
  env::EnvConfig env;
  dqn::DqnConfig dqn;
  cql::CqlConfig cql;
  EvalSettings eval;
  CollectSettings collect;

  /// Stage configs with the run seed filled in.
  dqn::DqnConfig dqn_config() const;
  cql::CqlConfig cql_config() const;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

enum class ValueKind : std::uint8_t { Boolean, Integer, Float, String, IntegerList };

struct ConfigKey {
  std::string name;
  ValueKind kind;
  std::string help;
  std::function<std::string(const RunConfig&)> show;
  std::function<void(RunConfig&, const TomlValue&)> assign;
};

/// Every accepted key, in file order.
const std::vector<ConfigKey>& config_keys();

/// Throws ConfigError for unknown keys or values of the wrong type.
void apply_value(RunConfig& config, std::string_view key, const TomlValue& value);

/// Command-line form: strings are taken verbatim, lists may be written
/// "64,64" or "[64, 64]".
void apply_text(RunConfig& config, std::string_view key, std::string_view text);

void apply_toml(RunConfig& config, const std::vector<TomlEntry>& entries);

/// Defaults overlaid with the file's entries, validated.
RunConfig load_run_config(const std::string& path);

/// All keys with their current values, as TOML.
std::string render_toml(const RunConfig& config);

}  // namespace pipemaint::config
