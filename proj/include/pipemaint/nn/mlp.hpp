#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pipemaint/rng.hpp"

namespace pipemaint::nn {

enum class Activation : std::uint8_t { ReLU, Tanh, LeakyReLU };

std::string_view activation_name(Activation activation);
/// Accepts "relu", "tanh", "leaky_relu". Throws ConfigError otherwise.
Activation parse_activation(std::string_view name);

struct MlpConfig {
  std::size_t input_dim = 7;
  std::vector<std::size_t> hidden_dims{64, 64};
  std::size_t output_dim = 3;
  Activation activation = Activation::ReLU;
  /// Applied to hidden activations in training mode only.
  double dropout_rate = 0.0;

  /// Throws ConfigError on zero dims or dropout outside [0, 1).
  void validate() const;
  bool operator==(const MlpConfig&) const = default;
};

/// Dense layer; `weights` is out x in, row-major.
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

struct MlpParams {
  MlpConfig config;
  std::vector<Layer> layers;
  /// Bumped by every in-place update so stale forward caches are detected.
  std::uint64_t revision = 0;

  /// Compares config and values, not revision.
  bool same_values(const MlpParams& other) const { return config == other.config && layers == other.layers; }
};

/// Same shapes as MlpParams::layers.
struct Gradients {
  std::vector<Layer> layers;
};

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
};

enum class Mode : std::uint8_t { Train, Eval };

/// Activations retained by a training forward pass.
struct ForwardCache {
  const MlpParams* params = nullptr;
  std::uint64_t revision = 0;
  std::size_t batch = 0;
  /// Input to each layer (post-activation, post-dropout of the previous one).
  std::vector<std::vector<double>> inputs;
  /// Pre-activation values of every hidden layer.
  std::vector<std::vector<double>> pre_activations;
  /// Per-element dropout multipliers (0 or 1/(1-p)); empty when inactive.
  std::vector<std::vector<double>> masks;
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
MlpParams init_params(const MlpConfig& config, Rng& rng);
/// All weights and biases zero.
MlpParams zero_params(const MlpConfig& config);
/// Deep copy; later updates to the source do not affect it.
MlpParams copy_params(const MlpParams& source);
/// Zero-valued gradients shaped like `params`.
Gradients zero_gradients(const MlpParams& params);

/// Batched forward pass keeping the cache needed by backward().
/// `rng` is required in Train mode when dropout is enabled.
ForwardResult forward(const MlpParams& params, const Matrix& input, Mode mode, Rng* rng = nullptr);

/// Eval-mode forward pass without a cache.
Matrix predict(const MlpParams& params, const Matrix& input);
std::vector<double> predict(const MlpParams& params, std::span<const double> input);

/// Gradients of sum(output_grad .* output) with respect to every parameter.
/// Throws UsageError if the cache does not belong to the current `params`.
Gradients backward(const MlpParams& params, const ForwardCache& cache, const Matrix& output_grad);

}  // namespace pipemaint::nn
