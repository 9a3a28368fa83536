#pragma once

// Reader for the TOML subset our run files use: [table] headers, bare keys,
// strings, integers, floats, booleans and single-line arrays of those.
// Dotted keys, inline tables, dates and multi-line values are rejected.

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace pipemaint::config {

struct TomlValue;
using TomlArray = std::vector<TomlValue>;

struct TomlValue {
  std::variant<bool, std::int64_t, double, std::string, TomlArray> data;

  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_float() const { return std::holds_alternative<double>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<TomlArray>(data); }
  std::string type_name() const;
};

/// One assignment, with its table prefix folded in ("dqn.gamma").
struct TomlEntry {
  std::string key;
  TomlValue value;
  int line = 0;
};

/// Throws ParseError("toml line N: ...") on syntax errors or duplicate keys.
std::vector<TomlEntry> parse_toml(std::istream& in);
std::vector<TomlEntry> parse_toml_file(const std::string& path);

/// Parses a single value as it would appear right of '='.
TomlValue parse_toml_value(std::string_view text);

}  // namespace pipemaint::config
