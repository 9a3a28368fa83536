#include "pipemaint/nn/kernels.hpp"

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pipemaint::nn::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

bool worth_parallel(const DenseShape& s) { return s.batch * s.in * s.out >= kParallelWork; }

}  // namespace

void dense_forward(std::span<const double> weights, std::span<const double> bias,
                   std::span<const double> x, std::span<double> y, DenseShape shape) {
  const auto [batch, in, out] = shape;

  // Feature-major copy so the innermost loop runs over the batch with unit stride.
  std::vector<double> xt(in * batch);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t i = 0; i < in; ++i) xt[i * batch + r] = x[r * in + i];
  }

  const auto n_out = static_cast<std::ptrdiff_t>(out);
#pragma omp parallel if (worth_parallel(shape))
  {
    std::vector<double> acc(batch);
#pragma omp for schedule(static)
    for (std::ptrdiff_t so = 0; so < n_out; ++so) {
      const auto o = static_cast<std::size_t>(so);
      const double* w = weights.data() + o * in;
      for (std::size_t r = 0; r < batch; ++r) acc[r] = bias[o];
      for (std::size_t i = 0; i < in; ++i) {
        const double wi = w[i];
        const double* col = xt.data() + i * batch;
        for (std::size_t r = 0; r < batch; ++r) acc[r] += wi * col[r];
      }
      for (std::size_t r = 0; r < batch; ++r) y[r * out + o] = acc[r];
    }
  }
}

void dense_backward(std::span<const double> weights, std::span<const double> x,
                    std::span<const double> dy, std::span<double> dweights, std::span<double> dbias,
                    std::span<double> dx, DenseShape shape) {
  const auto [batch, in, out] = shape;
  const bool parallel = worth_parallel(shape);

  const auto n_out = static_cast<std::ptrdiff_t>(out);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t so = 0; so < n_out; ++so) {
    const auto o = static_cast<std::size_t>(so);
    double* dw = dweights.data() + o * in;
    double db = dbias[o];
    for (std::size_t r = 0; r < batch; ++r) {
      const double g = dy[r * out + o];
      const double* xr = x.data() + r * in;
      for (std::size_t i = 0; i < in; ++i) dw[i] += g * xr[i];
      db += g;
    }
    dbias[o] = db;
  }

  if (dx.empty()) return;
  const auto n_rows = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t sr = 0; sr < n_rows; ++sr) {
    const auto r = static_cast<std::size_t>(sr);
    double* dxr = dx.data() + r * in;
    for (std::size_t i = 0; i < in; ++i) dxr[i] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[r * out + o];
      const double* w = weights.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) dxr[i] += g * w[i];
    }
  }
}

namespace reference {

void dense_forward(std::span<const double> weights, std::span<const double> bias,
                   std::span<const double> x, std::span<double> y, DenseShape shape) {
  const auto [batch, in, out] = shape;
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += weights[o * in + i] * x[r * in + i];
      y[r * out + o] = acc;
    }
  }
}

void dense_backward(std::span<const double> weights, std::span<const double> x,
                    std::span<const double> dy, std::span<double> dweights, std::span<double> dbias,
                    std::span<double> dx, DenseShape shape) {
  const auto [batch, in, out] = shape;
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[r * out + o];
      for (std::size_t i = 0; i < in; ++i) dweights[o * in + i] += g * x[r * in + i];
      dbias[o] += g;
    }
  }
  if (dx.empty()) return;
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += dy[r * out + o] * weights[o * in + i];
      dx[r * in + i] = acc;
    }
  }
}

}  // namespace reference

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace pipemaint::nn::kernels
