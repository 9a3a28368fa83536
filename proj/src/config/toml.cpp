#include "pipemaint/config/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>

#include "pipemaint/error.hpp"

namespace pipemaint::config {

namespace {

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool at_end() const { return pos >= text.size(); }
  char peek() const { return at_end() ? '\0' : text[pos]; }
};

bool bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
}

std::string parse_string(Cursor& c) {
  ++c.pos;  // opening quote
  std::string out;
  while (!c.at_end()) {
    const char ch = c.text[c.pos++];
    if (ch == '"') return out;
    if (ch != '\\') {
      out.push_back(ch);
      continue;
    }
    if (c.at_end()) break;
    switch (const char esc = c.text[c.pos++]) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case '\\': out.push_back('\\'); break;
      case '"': out.push_back('"'); break;
      default: throw ParseError(std::string("unsupported escape \\") + esc);
    }
  }
  throw ParseError("unterminated string");
}

TomlValue parse_scalar(std::string_view token) {
  if (token == "true") return {true};
  if (token == "false") return {false};
  if (token == "inf" || token == "+inf" || token == "-inf" || token == "nan") {
    throw ParseError("non-finite numbers are not accepted");
  }
  std::string digits;
  for (std::size_t i = 0; i < token.size(); ++i) {
    const char ch = token[i];
    if (ch == '_') {
      if (i == 0 || i + 1 == token.size() || std::isdigit(static_cast<unsigned char>(token[i - 1])) == 0 ||
          std::isdigit(static_cast<unsigned char>(token[i + 1])) == 0) {
        throw ParseError("misplaced '_' in number '" + std::string(token) + "'");
      }
      continue;
    }
    digits.push_back(ch);
  }
  if (digits.empty()) throw ParseError("missing value");
  const char* first = digits.data() + (digits.front() == '+' ? 1 : 0);
  const char* last = digits.data() + digits.size();
  const bool looks_float = digits.find_first_of(".eE") != std::string::npos;
  if (!looks_float) {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && p == last) return {v};
  } else {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && p == last) return {v};
  }
  throw ParseError("cannot parse value '" + std::string(token) + "'");
}

TomlValue parse_value(Cursor& c, int depth) {
  c.skip_space();
  if (c.at_end()) throw ParseError("missing value");
  if (c.peek() == '"') return {parse_string(c)};
  if (c.peek() == '[') {
    if (depth > 8) throw ParseError("arrays nested too deeply");
    ++c.pos;
    TomlArray items;
    while (true) {
      c.skip_space();
      if (c.peek() == ']') {
        ++c.pos;
        return {std::move(items)};
      }
      items.push_back(parse_value(c, depth + 1));
      c.skip_space();
      if (c.peek() == ',') {
        ++c.pos;
      } else if (c.peek() != ']') {
        throw ParseError("expected ',' or ']' in array");
      }
    }
  }
  const std::size_t start = c.pos;
  while (!c.at_end() && c.peek() != ',' && c.peek() != ']' && c.peek() != ' ' && c.peek() != '\t' &&
         c.peek() != '#') {
    ++c.pos;
  }
  return parse_scalar(c.text.substr(start, c.pos - start));
}

void expect_line_end(Cursor& c) {
  c.skip_space();
  if (!c.at_end() && c.peek() != '#') throw ParseError("unexpected text after value");
}

}  // namespace

std::string TomlValue::type_name() const {
  switch (data.index()) {
    case 0: return "boolean";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "string";
    default: return "array";
  }
}

TomlValue parse_toml_value(std::string_view text) {
  Cursor c{text};
  TomlValue v = parse_value(c, 0);
  expect_line_end(c);
  return v;
}

std::vector<TomlEntry> parse_toml(std::istream& in) {
  std::vector<TomlEntry> entries;
  std::set<std::string> seen_keys;
  std::set<std::string> seen_tables;
  std::string table;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      Cursor c{line};
      c.skip_space();
      if (c.at_end() || c.peek() == '#') continue;
      if (c.peek() == '[') {
        ++c.pos;
        c.skip_space();
        const std::size_t start = c.pos;
        while (!c.at_end() && bare_key_char(c.peek())) ++c.pos;
        std::string name(line.substr(start, c.pos - start));
        c.skip_space();
        if (name.empty() || c.peek() != ']') throw ParseError("malformed table header");
        ++c.pos;
        expect_line_end(c);
        if (!seen_tables.insert(name).second) throw ParseError("table [" + name + "] defined twice");
        table = std::move(name);
        continue;
      }
      const std::size_t start = c.pos;
      while (!c.at_end() && bare_key_char(c.peek())) ++c.pos;
      std::string key(line.substr(start, c.pos - start));
      if (key.empty()) throw ParseError("expected a key");
      c.skip_space();
      if (c.peek() != '=') throw ParseError("expected '=' after key '" + key + "'");
      ++c.pos;
      TomlValue value = parse_value(c, 0);
      expect_line_end(c);
      std::string full = table.empty() ? key : table + "." + key;
      if (!seen_keys.insert(full).second) throw ParseError("duplicate key '" + full + "'");
      entries.push_back({std::move(full), std::move(value), number});
    } catch (const ParseError& e) {
      throw ParseError("toml line " + std::to_string(number) + ": " + e.what());
    }
  }
  return entries;
}

std::vector<TomlEntry> parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  return parse_toml(in);
}

}  // namespace pipemaint::config
