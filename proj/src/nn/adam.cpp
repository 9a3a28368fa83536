#include "pipemaint/nn/adam.hpp"

#include <cmath>
#include <string>

#include "pipemaint/error.hpp"

namespace pipemaint::nn {

namespace {

void check_shapes(const std::vector<Layer>& a, const std::vector<Layer>& b, const char* what) {
  if (a.size() != b.size()) throw UsageError(std::string(what) + ": layer count mismatch");
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].weights.size() != b[l].weights.size() || a[l].bias.size() != b[l].bias.size()) {
      throw UsageError(std::string(what) + ": shape mismatch at layer " + std::to_string(l));
    }
  }
}

void check_finite(const std::vector<double>& values, std::size_t layer, const char* field) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw NumericError("non-finite gradient at layers[" + std::to_string(layer) + "]." + field + "[" +
                         std::to_string(k) + "]");
    }
  }
}

void update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
            std::vector<double>& v, const AdamOptions& o, double correction1, double correction2) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g[k];
    v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g[k] * g[k];
    const double m_hat = m[k] / correction1;
    const double v_hat = v[k] / correction2;
    p[k] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
  }
}

}  // namespace

AdamState make_adam(const MlpParams& params, AdamOptions options) {
  AdamState state;
  state.options = options;
  state.first_moment = zero_gradients(params).layers;
  state.second_moment = state.first_moment;
  return state;
}

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state) {
  check_shapes(params.layers, grads.layers, "adam_step gradients");
  check_shapes(params.layers, state.first_moment, "adam_step moments");
  for (std::size_t l = 0; l < grads.layers.size(); ++l) {
    check_finite(grads.layers[l].weights, l, "weights");
    check_finite(grads.layers[l].bias, l, "bias");
  }

  ++state.step;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& m = state.first_moment[l];
    auto& v = state.second_moment[l];
    update(params.layers[l].weights, grads.layers[l].weights, m.weights, v.weights, o, correction1, correction2);
    update(params.layers[l].bias, grads.layers[l].bias, m.bias, v.bias, o, correction1, correction2);
  }
  ++params.revision;
}

}  // namespace pipemaint::nn
