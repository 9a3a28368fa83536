#pragma once

// Dense-layer kernels over a minibatch.
//
// All matrices are row-major: weights are out x in, activations batch x in.
// Each output element is accumulated in the same order by both
// implementations, so they agree bit-for-bit; the default versions only
// reorganize memory access and split independent outputs across OpenMP
// threads.

#include <cstddef>
#include <span>

namespace pipemaint::nn::kernels {

struct DenseShape {
  std::size_t batch = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

/// y = x * W^T + b.
void dense_forward(std::span<const double> weights, std::span<const double> bias,
                   std::span<const double> x, std::span<double> y, DenseShape shape);

/// Accumulates dW += dy^T x and db += column sums of dy. Overwrites dx with
/// dy * W unless dx is empty.
void dense_backward(std::span<const double> weights, std::span<const double> x,
                    std::span<const double> dy, std::span<double> dweights, std::span<double> dbias,
                    std::span<double> dx, DenseShape shape);

/// Straightforward serial loops; kept as the oracle for the versions above.
namespace reference {

void dense_forward(std::span<const double> weights, std::span<const double> bias,
                   std::span<const double> x, std::span<double> y, DenseShape shape);

void dense_backward(std::span<const double> weights, std::span<const double> x,
                    std::span<const double> dy, std::span<double> dweights, std::span<double> dbias,
                    std::span<double> dx, DenseShape shape);

}  // namespace reference

/// Number of threads the parallel kernels may use (1 without OpenMP).
int max_threads();

}  // namespace pipemaint::nn::kernels
