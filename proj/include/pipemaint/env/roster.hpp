#pragma once

#include <istream>
#include <span>
#include <string>
#include <vector>

#include "pipemaint/env/deterioration.hpp"

namespace pipemaint::env {

/// Reads a roster CSV with header `id,age,material,length`.
/// Throws ParseError naming the offending line.
std::vector<PipeSpec> parse_pipes(std::istream& in);
std::vector<PipeSpec> load_pipes(const std::string& path);

/// Inverse of parse_pipes; the output parses back to the same specs.
std::string format_pipes(std::span<const PipeSpec> pipes);

/// Stable checksum of a roster, recorded in dataset headers.
std::string roster_checksum(std::span<const PipeSpec> pipes);

}  // namespace pipemaint::env
