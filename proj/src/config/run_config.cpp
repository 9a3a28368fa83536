#include "pipemaint/config/run_config.hpp"

#include <limits>
#include <map>

#include "pipemaint/error.hpp"
#include "pipemaint/format.hpp"

namespace pipemaint::config {

namespace {

std::string key_error(std::string_view key, const std::string& what) {
  return "config key '" + std::string(key) + "': " + what;
}

double as_float(const TomlValue& v) {
  if (v.is_float()) return std::get<double>(v.data);
  if (v.is_int()) return static_cast<double>(std::get<std::int64_t>(v.data));
  throw ConfigError("expected a number, got " + v.type_name());
}

std::int64_t as_int(const TomlValue& v) {
  if (!v.is_int()) throw ConfigError("expected an integer, got " + v.type_name());
  return std::get<std::int64_t>(v.data);
}

std::size_t as_count(const TomlValue& v) {
  const std::int64_t i = as_int(v);
  if (i < 0) throw ConfigError("expected a non-negative integer");
  return static_cast<std::size_t>(i);
}

const std::string& as_string(const TomlValue& v) {
  if (!v.is_string()) throw ConfigError("expected a string, got " + v.type_name());
  return std::get<std::string>(v.data);
}

std::vector<std::size_t> as_dims(const TomlValue& v) {
  if (!v.is_array()) throw ConfigError("expected an array of integers, got " + v.type_name());
  std::vector<std::size_t> dims;
  for (const auto& item : std::get<TomlArray>(v.data)) {
    const std::size_t d = as_count(item);
    if (d == 0) throw ConfigError("layer widths must be positive");
    dims.push_back(d);
  }
  if (dims.empty()) throw ConfigError("at least one hidden layer is required");
  return dims;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

std::string show_float(double v) {
  std::string s = format_double(v);
  // TOML floats need a '.' or exponent to stay floats.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string show_dims(const std::vector<std::size_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

std::string_view anchor_name(baselines::ScheduleAnchor a) {
  return a == baselines::ScheduleAnchor::Calendar ? "calendar" : "age";
}

baselines::ScheduleAnchor parse_anchor(std::string_view s) {
  if (s == "calendar") return baselines::ScheduleAnchor::Calendar;
  if (s == "age") return baselines::ScheduleAnchor::Age;
  throw ConfigError("expected \"calendar\" or \"age\"");
}

// Accessors let one helper serve every field of a given type.
template <typename Get>
ConfigKey float_key(std::string name, std::string help, Get get) {
  return {std::move(name), ValueKind::Float, std::move(help),
          [get](const RunConfig& c) { return show_float(get(c)); },
          [get](RunConfig& c, const TomlValue& v) { get(c) = as_float(v); }};
}

template <typename Get>
ConfigKey count_key(std::string name, std::string help, Get get) {
  return {std::move(name), ValueKind::Integer, std::move(help),
          [get](const RunConfig& c) { return std::to_string(get(c)); },
          [get](RunConfig& c, const TomlValue& v) { get(c) = as_count(v); }};
}

template <typename Get>
ConfigKey int_key(std::string name, std::string help, Get get) {
  return {std::move(name), ValueKind::Integer, std::move(help),
          [get](const RunConfig& c) { return std::to_string(get(c)); },
          [get](RunConfig& c, const TomlValue& v) {
            const std::int64_t i = as_int(v);
            if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
              throw ConfigError("integer out of range");
            }
            get(c) = static_cast<int>(i);
          }};
}

template <typename Get>
ConfigKey dims_key(std::string name, std::string help, Get get) {
  return {std::move(name), ValueKind::IntegerList, std::move(help),
          [get](const RunConfig& c) { return show_dims(get(c)); },
          [get](RunConfig& c, const TomlValue& v) { get(c) = as_dims(v); }};
}

template <typename Get>
ConfigKey activation_key(std::string name, Get get) {
  return {std::move(name), ValueKind::String, "hidden activation: relu, tanh or leaky_relu",
          [get](const RunConfig& c) { return quote(nn::activation_name(get(c))); },
          [get](RunConfig& c, const TomlValue& v) { get(c) = nn::parse_activation(as_string(v)); }};
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  keys.push_back({"seed", ValueKind::Integer, "master seed for every stage",
                  [](const RunConfig& c) { return std::to_string(c.seed); },
                  [](RunConfig& c, const TomlValue& v) { c.seed = static_cast<std::uint64_t>(as_count(v)); }});
  keys.push_back({"roster", ValueKind::String, "pipe roster CSV",
                  [](const RunConfig& c) { return quote(c.roster); },
                  [](RunConfig& c, const TomlValue& v) { c.roster = as_string(v); }});

  keys.push_back(float_key("env.sudden_failure_prob", "per-step chance of a forced replacement",
                           [](auto& c) -> auto& { return c.env.sudden_failure_prob; }));
  keys.push_back(int_key("env.maintain_min_years", "smallest age reduction of a maintain action",
                         [](auto& c) -> auto& { return c.env.maintain_min_years; }));
  keys.push_back(int_key("env.maintain_max_years", "largest age reduction of a maintain action",
                         [](auto& c) -> auto& { return c.env.maintain_max_years; }));

  keys.push_back(float_key("dqn.gamma", "discount factor", [](auto& c) -> auto& { return c.dqn.gamma; }));
  keys.push_back(float_key("dqn.learning_rate", "Adam step size",
                           [](auto& c) -> auto& { return c.dqn.learning_rate; }));
  keys.push_back(count_key("dqn.buffer_size", "replay capacity in transitions",
                           [](auto& c) -> auto& { return c.dqn.buffer_size; }));
  keys.push_back(float_key("dqn.epsilon_start", "initial exploration rate",
                           [](auto& c) -> auto& { return c.dqn.epsilon_start; }));
  keys.push_back(float_key("dqn.epsilon_final", "exploration rate after annealing",
                           [](auto& c) -> auto& { return c.dqn.epsilon_final; }));
  keys.push_back(float_key("dqn.exploration_fraction", "share of training steps spent annealing epsilon",
                           [](auto& c) -> auto& { return c.dqn.exploration_fraction; }));
  keys.push_back(count_key("dqn.episodes", "training episodes of 100 steps",
                           [](auto& c) -> auto& { return c.dqn.episodes; }));
  keys.push_back(count_key("dqn.batch_size", "minibatch size",
                           [](auto& c) -> auto& { return c.dqn.batch_size; }));
  keys.push_back(count_key("dqn.train_every", "environment steps per gradient step",
                           [](auto& c) -> auto& { return c.dqn.train_every; }));
  keys.push_back(count_key("dqn.learning_starts", "environment steps before the first update",
                           [](auto& c) -> auto& { return c.dqn.learning_starts; }));
  keys.push_back(count_key("dqn.target_sync_every", "environment steps between target syncs",
                           [](auto& c) -> auto& { return c.dqn.target_sync_every; }));
  keys.push_back(dims_key("dqn.hidden_dims", "hidden layer widths",
                          [](auto& c) -> auto& { return c.dqn.hidden_dims; }));
  keys.push_back(activation_key("dqn.activation", [](auto& c) -> auto& { return c.dqn.activation; }));

  keys.push_back(float_key("cql.alpha", "weight of the conservative penalty",
                           [](auto& c) -> auto& { return c.cql.alpha; }));
  keys.push_back(float_key("cql.gamma", "discount factor", [](auto& c) -> auto& { return c.cql.gamma; }));
  keys.push_back(float_key("cql.learning_rate", "Adam step size",
                           [](auto& c) -> auto& { return c.cql.learning_rate; }));
  keys.push_back(float_key("cql.dropout", "dropout rate on hidden layers during training",
                           [](auto& c) -> auto& { return c.cql.dropout; }));
  keys.push_back(float_key("cql.train_fraction", "share of episodes used for training",
                           [](auto& c) -> auto& { return c.cql.train_fraction; }));
  keys.push_back(count_key("cql.epochs", "passes over the training split",
                           [](auto& c) -> auto& { return c.cql.epochs; }));
  keys.push_back(count_key("cql.batch_size", "minibatch size",
                           [](auto& c) -> auto& { return c.cql.batch_size; }));
  keys.push_back(count_key("cql.target_sync_every", "gradient steps between target syncs",
                           [](auto& c) -> auto& { return c.cql.target_sync_every; }));
  keys.push_back(dims_key("cql.hidden_dims", "hidden layer widths",
                          [](auto& c) -> auto& { return c.cql.hidden_dims; }));
  keys.push_back(activation_key("cql.activation", [](auto& c) -> auto& { return c.cql.activation; }));

  keys.push_back(count_key("eval.episodes_per_pipe", "evaluation rollouts per roster pipe",
                           [](auto& c) -> auto& { return c.eval.episodes_per_pipe; }));
  keys.push_back({"eval.schedule_anchor", ValueKind::String,
                  "clock for the maintain-5/10 schedules: calendar or age",
                  [](const RunConfig& c) { return quote(anchor_name(c.eval.schedule_anchor)); },
                  [](RunConfig& c, const TomlValue& v) { c.eval.schedule_anchor = parse_anchor(as_string(v)); }});

  keys.push_back(count_key("collect.episodes", "episodes per collected dataset",
                           [](auto& c) -> auto& { return c.collect.episodes; }));
  return keys;
}

const ConfigKey& find_key(std::string_view name) {
  static const std::map<std::string, std::size_t, std::less<>> index = [] {
    std::map<std::string, std::size_t, std::less<>> m;
    const auto& keys = config_keys();
    for (std::size_t i = 0; i < keys.size(); ++i) m.emplace(keys[i].name, i);
    return m;
  }();
  const auto it = index.find(name);
  if (it == index.end()) throw ConfigError("unknown config key '" + std::string(name) + "'");
  return config_keys()[it->second];
}

}  // namespace

dqn::DqnConfig RunConfig::dqn_config() const {
  dqn::DqnConfig c = dqn;
  c.seed = seed;
  return c;
}

cql::CqlConfig RunConfig::cql_config() const {
  cql::CqlConfig c = cql;
  c.seed = seed;
  return c;
}

void RunConfig::validate() const {
  if (roster.empty()) throw ConfigError("roster path is empty");
  env.validate();
  dqn.validate();
  cql.validate();
  if (eval.episodes_per_pipe == 0) throw ConfigError("eval.episodes_per_pipe must be positive");
  if (collect.episodes == 0) throw ConfigError("collect.episodes must be positive");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void apply_value(RunConfig& config, std::string_view key, const TomlValue& value) {
  const ConfigKey& k = find_key(key);
  try {
    k.assign(config, value);
  } catch (const Error& e) {
    throw ConfigError(key_error(key, e.what()));
  }
}

void apply_text(RunConfig& config, std::string_view key, std::string_view text) {
  const ConfigKey& k = find_key(key);
  TomlValue value;
  try {
    if (k.kind == ValueKind::String) {
      value = {std::string(text)};
    } else if (k.kind == ValueKind::IntegerList && !text.starts_with('[')) {
      value = parse_toml_value("[" + std::string(text) + "]");
    } else {
      value = parse_toml_value(text);
    }
  } catch (const ParseError& e) {
    throw ConfigError(key_error(key, e.what()));
  }
  apply_value(config, key, value);
}

void apply_toml(RunConfig& config, const std::vector<TomlEntry>& entries) {
  for (const auto& e : entries) {
    try {
      apply_value(config, e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("toml line " + std::to_string(e.line) + ": " + err.what());
    }
  }
}

RunConfig load_run_config(const std::string& path) {
  RunConfig config;
  apply_toml(config, parse_toml_file(path));
  config.validate();
  return config;
}

std::string render_toml(const RunConfig& config) {
  std::string out;
  std::string table;
  for (const auto& k : config_keys()) {
    const auto dot = k.name.find('.');
    const std::string section = dot == std::string::npos ? "" : k.name.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? k.name : k.name.substr(dot + 1);
    if (section != table) {
      out += "\n[" + section + "]\n";
      table = section;
    }
    out += leaf + " = " + k.show(config) + "\n";
  }
  return out;
}

}  // namespace pipemaint::config
