#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pipemaint {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Like format_double, but an empty field for nullopt.
std::string format_optional(const std::optional<double>& value);

/// Joins fields with commas and a trailing newline.
std::string csv_row(const std::vector<std::string>& fields);

/// Splits one CSV line on commas. No quoting support; none of our files need it.
std::vector<std::string> split_csv_line(std::string_view line);

/// Writes text to a file, replacing it. Throws UsageError if it cannot be opened.
void write_text_file(const std::string& path, std::string_view text);

/// FNV-1a 64-bit hash, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace pipemaint
