#include "pipemaint/nn/model_io.hpp"

#include <cmath>
#include <fstream>

#include "pipemaint/error.hpp"
#include "pipemaint/format.hpp"

namespace pipemaint::nn {

using nlohmann::json;

json model_to_json(const MlpParams& params) {
  const auto& c = params.config;
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["config"] = {{"input_dim", c.input_dim},
                   {"hidden_dims", c.hidden_dims},
                   {"output_dim", c.output_dim},
                   {"activation", std::string(activation_name(c.activation))},
                   {"dropout_rate", c.dropout_rate}};
  json layers = json::array();
  for (const auto& layer : params.layers) layers.push_back({{"weights", layer.weights}, {"bias", layer.bias}});
  doc["layers"] = std::move(layers);
  return doc;
}

MlpParams model_from_json(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw LoadError("unsupported model format_version " + doc.at("format_version").dump());
    }
    const auto& jc = doc.at("config");
    MlpConfig config;
    config.input_dim = jc.at("input_dim").get<std::size_t>();
    config.hidden_dims = jc.at("hidden_dims").get<std::vector<std::size_t>>();
    config.output_dim = jc.at("output_dim").get<std::size_t>();
    config.activation = parse_activation(jc.at("activation").get<std::string>());
    config.dropout_rate = jc.at("dropout_rate").get<double>();
    config.validate();

    MlpParams params = zero_params(config);
    const auto& jl = doc.at("layers");
    if (!jl.is_array() || jl.size() != params.layers.size()) throw LoadError("model layer count mismatch");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      auto& layer = params.layers[l];
      auto weights = jl[l].at("weights").get<std::vector<double>>();
      auto bias = jl[l].at("bias").get<std::vector<double>>();
      if (weights.size() != layer.weights.size() || bias.size() != layer.bias.size()) {
        throw LoadError("model layer " + std::to_string(l) + " has the wrong shape");
      }
      for (const double v : weights) {
        if (!std::isfinite(v)) throw LoadError("model layer " + std::to_string(l) + " has non-finite weights");
      }
      layer.weights = std::move(weights);
      layer.bias = std::move(bias);
    }
    return params;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed model document: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("invalid model config: ") + e.what());
  }
}

void save_json(const json& doc, const std::string& path) { write_text_file(path, doc.dump(1) + "\n"); }

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void save_model(const MlpParams& params, const std::string& path) { save_json(model_to_json(params), path); }

MlpParams load_model(const std::string& path) { return model_from_json(load_json(path)); }

}  // namespace pipemaint::nn
