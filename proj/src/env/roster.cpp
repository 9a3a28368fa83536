#include "pipemaint/env/roster.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include "pipemaint/error.hpp"
#include "pipemaint/format.hpp"

namespace pipemaint::env {

namespace {

template <typename T>
T parse_number(const std::string& field, std::size_t line_no, const char* what) {
  T value{};
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("roster line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
  }
  return value;
}

}  // namespace

std::vector<PipeSpec> parse_pipes(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("roster is empty (missing header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,age,material,length") {
    throw ParseError("roster line 1: expected header 'id,age,material,length', got '" + line + "'");
  }

  std::vector<PipeSpec> pipes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw ParseError("roster line " + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    }
    PipeSpec spec;
    spec.id = parse_number<int>(fields[0], line_no, "id");
    spec.age0 = parse_number<int>(fields[1], line_no, "age");
    try {
      spec.material = parse_material(fields[2]);
    } catch (const ParseError& e) {
      throw ParseError("roster line " + std::to_string(line_no) + ": " + e.what());
    }
    spec.length_m = parse_number<double>(fields[3], line_no, "length");
    if (spec.age0 < 0) throw ParseError("roster line " + std::to_string(line_no) + ": negative age");
    if (!(spec.length_m > 0.0) || !std::isfinite(spec.length_m)) {
      throw ParseError("roster line " + std::to_string(line_no) + ": length must be positive");
    }
    pipes.push_back(spec);
  }
  return pipes;
}

std::vector<PipeSpec> load_pipes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open roster '" + path + "'");
  return parse_pipes(in);
}

std::string format_pipes(std::span<const PipeSpec> pipes) {
  std::string text = "id,age,material,length\n";
  for (const auto& p : pipes) {
    text += csv_row({std::to_string(p.id), std::to_string(p.age0), std::string(material_name(p.material)),
                     format_double(p.length_m)});
  }
  return text;
}

std::string roster_checksum(std::span<const PipeSpec> pipes) { return fnv1a_hex(format_pipes(pipes)); }

}  // namespace pipemaint::env
