#include "pipemaint/nn/mlp.hpp"

#include <cmath>
#include <string>

#include "pipemaint/error.hpp"
#include "pipemaint/nn/kernels.hpp"

namespace pipemaint::nn {

namespace {

constexpr double kLeakySlope = 0.01;

double activate(Activation a, double z) {
  switch (a) {
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::LeakyReLU: return z > 0.0 ? z : kLeakySlope * z;
  }
  return z;
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::LeakyReLU: return z > 0.0 ? 1.0 : kLeakySlope;
  }
  return 1.0;
}

std::vector<Layer> make_layers(const MlpConfig& config) {
  std::vector<Layer> layers;
  std::size_t in = config.input_dim;
  auto add = [&](std::size_t out) {
    layers.push_back(Layer{in, out, std::vector<double>(in * out, 0.0), std::vector<double>(out, 0.0)});
    in = out;
  };
  for (const auto h : config.hidden_dims) add(h);
  add(config.output_dim);
  return layers;
}

void check_input(const MlpParams& params, const Matrix& input) {
  if (input.cols != params.config.input_dim) {
    throw UsageError("network input has " + std::to_string(input.cols) + " columns, expected " +
                     std::to_string(params.config.input_dim));
  }
  if (input.values.size() != input.rows * input.cols) throw UsageError("malformed input matrix");
}

}  // namespace

std::string_view activation_name(Activation activation) {
  switch (activation) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::LeakyReLU: return "leaky_relu";
  }
  return "relu";
}

Activation parse_activation(std::string_view name) {
  for (const auto a : {Activation::ReLU, Activation::Tanh, Activation::LeakyReLU}) {
    if (activation_name(a) == name) return a;
  }
  throw ConfigError("unknown activation '" + std::string(name) + "' (relu|tanh|leaky_relu)");
}

void MlpConfig::validate() const {
  if (input_dim == 0 || output_dim == 0) throw ConfigError("network dimensions must be >= 1");
  for (const auto h : hidden_dims) {
    if (h == 0) throw ConfigError("hidden layer widths must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
}

MlpParams init_params(const MlpConfig& config, Rng& rng) {
  config.validate();
  MlpParams params{config, make_layers(config), 0};
  for (auto& layer : params.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (auto& w : layer.weights) w = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return params;
}

MlpParams zero_params(const MlpConfig& config) {
  config.validate();
  return MlpParams{config, make_layers(config), 0};
}

MlpParams copy_params(const MlpParams& source) { return source; }

Gradients zero_gradients(const MlpParams& params) { return Gradients{make_layers(params.config)}; }

ForwardResult forward(const MlpParams& params, const Matrix& input, Mode mode, Rng* rng) {
  check_input(params, input);
  const auto& config = params.config;
  const std::size_t batch = input.rows;
  const bool dropout = mode == Mode::Train && config.dropout_rate > 0.0;
  if (dropout && rng == nullptr) throw UsageError("dropout in training mode needs a random stream");
  const double keep_scale = dropout ? 1.0 / (1.0 - config.dropout_rate) : 1.0;

  ForwardResult result;
  auto& cache = result.cache;
  cache.params = &params;
  cache.revision = params.revision;
  cache.batch = batch;

  std::vector<double> current = input.values;
  const std::size_t n_layers = params.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Layer& layer = params.layers[l];
    std::vector<double> z(batch * layer.out);
    kernels::dense_forward(layer.weights, layer.bias, current, z, {batch, layer.in, layer.out});
    cache.inputs.push_back(std::move(current));
    if (l + 1 == n_layers) {
      result.output.rows = batch;
      result.output.cols = layer.out;
      result.output.values = std::move(z);
      break;
    }
    std::vector<double> a(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) a[k] = activate(config.activation, z[k]);
    if (dropout) {
      std::vector<double> mask(z.size());
      for (std::size_t k = 0; k < mask.size(); ++k) {
        mask[k] = rng->uniform() < config.dropout_rate ? 0.0 : keep_scale;
        a[k] *= mask[k];
      }
      cache.masks.push_back(std::move(mask));
    }
    cache.pre_activations.push_back(std::move(z));
    current = std::move(a);
  }
  return result;
}

Matrix predict(const MlpParams& params, const Matrix& input) {
  check_input(params, input);
  const std::size_t batch = input.rows;
  std::vector<double> current = input.values;
  Matrix output;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    std::vector<double> z(batch * layer.out);
    kernels::dense_forward(layer.weights, layer.bias, current, z, {batch, layer.in, layer.out});
    if (l + 1 == params.layers.size()) {
      output.rows = batch;
      output.cols = layer.out;
      output.values = std::move(z);
      break;
    }
    for (auto& v : z) v = activate(params.config.activation, v);
    current = std::move(z);
  }
  return output;
}

std::vector<double> predict(const MlpParams& params, std::span<const double> input) {
  Matrix x(1, input.size());
  x.values.assign(input.begin(), input.end());
  return predict(params, x).values;
}

Gradients backward(const MlpParams& params, const ForwardCache& cache, const Matrix& output_grad) {
  if (cache.params != &params || cache.revision != params.revision) {
    throw UsageError("forward cache is stale or belongs to different parameters");
  }
  const std::size_t n_layers = params.layers.size();
  if (cache.inputs.size() != n_layers || cache.pre_activations.size() + 1 != n_layers) {
    throw UsageError("forward cache does not match the network topology");
  }
  const std::size_t batch = cache.batch;
  if (output_grad.rows != batch || output_grad.cols != params.config.output_dim) {
    throw UsageError("output gradient shape does not match the forward batch");
  }

  Gradients grads = zero_gradients(params);
  std::vector<double> delta = output_grad.values;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Layer& layer = params.layers[l];
    std::vector<double> dx;
    if (l > 0) dx.resize(batch * layer.in);
    kernels::dense_backward(layer.weights, cache.inputs[l], delta, grads.layers[l].weights,
                            grads.layers[l].bias, dx, {batch, layer.in, layer.out});
    if (l == 0) break;
    const auto& z = cache.pre_activations[l - 1];
    const bool masked = !cache.masks.empty();
    for (std::size_t k = 0; k < dx.size(); ++k) {
      double g = dx[k];
      if (masked) g *= cache.masks[l - 1][k];
      dx[k] = g * activate_derivative(params.config.activation, z[k]);
    }
    delta = std::move(dx);
  }
  return grads;
}

}  // namespace pipemaint::nn
