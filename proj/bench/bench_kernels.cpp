// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <vector>

#include "pipemaint/env/roster.hpp"
#include "pipemaint/eval/evaluation.hpp"
#include "pipemaint/nn/kernels.hpp"
#include "pipemaint/rng.hpp"

using namespace pipemaint;
namespace k = pipemaint::nn::kernels;

namespace {

struct DenseFixture {
  k::DenseShape shape;
  std::vector<double> w, b, x, y, dy, dw, db, dx;

  explicit DenseFixture(std::size_t batch, std::size_t in = 64, std::size_t out = 64) : shape{batch, in, out} {
    Rng rng(1);
    auto fill = [&rng](std::vector<double>& v, std::size_t n) {
      v.resize(n);
      for (auto& e : v) e = rng.uniform() - 0.5;
    };
    fill(w, out * in);
    fill(b, out);
    fill(x, batch * in);
    fill(dy, batch * out);
    y.assign(batch * out, 0.0);
    dw.assign(out * in, 0.0);
    db.assign(out, 0.0);
    dx.assign(batch * in, 0.0);
  }
};

template <bool Parallel>
void BM_dense_forward(benchmark::State& state) {
  DenseFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::dense_forward(f.w, f.b, f.x, f.y, f.shape);
    } else {
      k::reference::dense_forward(f.w, f.b, f.x, f.y, f.shape);
    }
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_dense_backward(benchmark::State& state) {
  DenseFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::dense_backward(f.w, f.x, f.dy, f.dw, f.db, f.dx, f.shape);
    } else {
      k::reference::dense_backward(f.w, f.x, f.dy, f.dw, f.db, f.dx, f.shape);
    }
    benchmark::DoNotOptimize(f.dw.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

const std::vector<env::PipeSpec>& roster() {
  static const auto pipes = env::load_pipes(PIPEMAINT_SOURCE_DIR "/data/pipes.csv");
  return pipes;
}

template <bool Parallel>
void BM_evaluate(benchmark::State& state) {
  Rng rng(2);
  const eval::GreedyModelPolicy policy("net", nn::init_params(nn::MlpConfig{}, rng));
  const auto episodes = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto report = Parallel ? eval::evaluate_policy(policy, roster(), episodes, env::EnvConfig{}, 0)
                           : eval::evaluate_policy_serial(policy, roster(), episodes, env::EnvConfig{}, 0);
    benchmark::DoNotOptimize(report.avg_pf);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 16);
}

}  // namespace

BENCHMARK(BM_dense_forward<false>)->Name("dense_forward/reference")->Arg(32)->Arg(4096);
BENCHMARK(BM_dense_forward<true>)->Name("dense_forward/parallel")->Arg(32)->Arg(4096);
BENCHMARK(BM_dense_backward<false>)->Name("dense_backward/reference")->Arg(32)->Arg(4096);
BENCHMARK(BM_dense_backward<true>)->Name("dense_backward/parallel")->Arg(32)->Arg(4096);
BENCHMARK(BM_evaluate<false>)->Name("evaluate/serial")->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_evaluate<true>)->Name("evaluate/parallel")->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
