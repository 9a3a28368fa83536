#pragma once

#include <string>

#include "json.hpp"

#include "pipemaint/nn/mlp.hpp"

namespace pipemaint::nn {

inline constexpr int kModelFormatVersion = 1;

/// {format_version, config{...}, layers:[{weights, bias}]}; weights row-major.
nlohmann::json model_to_json(const MlpParams& params);
/// Throws LoadError on version, shape or value problems.
MlpParams model_from_json(const nlohmann::json& doc);

void save_model(const MlpParams& params, const std::string& path);
MlpParams load_model(const std::string& path);

/// Pretty-printed JSON file helpers shared by the sidecar writers.
void save_json(const nlohmann::json& doc, const std::string& path);
nlohmann::json load_json(const std::string& path);

}  // namespace pipemaint::nn
