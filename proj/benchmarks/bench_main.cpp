// Microbenchmarks for the hot paths: second-order field evaluation,
// full-batch loss gradients as the interior set grows, and the convex
// network across widths.  Run with --benchmark_filter=<regex> to slice.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "pinnafe/collocation.hpp"
#include "pinnafe/engine.hpp"
#include "pinnafe/ma_loss.hpp"
#include "pinnafe/model.hpp"
#include "pinnafe/problem.hpp"

using namespace pinnafe;

namespace {

Engine make_engine(const ProblemSpec& prob, int width, int depth, int m_out,
                   uint64_t seed) {
  ModelDims dims;
  dims.d = prob.d;
  dims.n = prob.pool.size();
  dims.heads = 2;
  dims.d_k = 4;
  dims.m_out = m_out;
  dims.depth = depth;
  dims.width = width;
  Model model;
  model.pool = prob.pool;
  model.params = ModelParams::init(dims, seed);
  return Engine(std::move(model));
}

void bench_eval_jet(benchmark::State& state, const ProblemSpec& prob) {
  Engine eng = make_engine(prob, 32, 3, 6, 21);
  std::vector<double> x(size_t(prob.d), 0.37);
  for (auto _ : state) {
    Jet j = eng.eval_jet(x.data());
    benchmark::DoNotOptimize(j);
  }
}

void BM_EvalJet2D(benchmark::State& state) {
  bench_eval_jet(state, case_smooth2d());
}

void BM_EvalJet3D(benchmark::State& state) {
  bench_eval_jet(state, case_smooth3d());
}

// One full weighted PDE+BC gradient over an interior batch of the given
// size; per-iteration time should scale linearly with the batch.
void BM_LossGradient(benchmark::State& state) {
  ProblemSpec prob = case_smooth2d();
  Engine eng = make_engine(prob, 32, 3, 6, 22);
  const int n_int = int(state.range(0));
  CollocationSet set = sample_collocation(prob, n_int, 256, 5);
  std::vector<double> w(size_t(n_int), 1.0 / n_int);
  std::vector<double> grad;
  LossParams lp;
  for (auto _ : state) {
    LossBreakdown lb = loss_param_gradient(eng, prob, set, w, lp,
                                           LossRecipe::Total, grad, 1);
    benchmark::DoNotOptimize(lb.total);
  }
  state.SetItemsProcessed(state.iterations() * n_int);
}

// Value+jet through the convex network alone as the hidden width grows.
void BM_ConvexNetWidth(benchmark::State& state) {
  ProblemSpec prob = case_smooth2d();
  Engine eng = make_engine(prob, int(state.range(0)), 4, 8, 23);
  double x[2] = {0.41, 0.58};
  for (auto _ : state) {
    Jet j = eng.eval_jet(x);
    benchmark::DoNotOptimize(j);
  }
}

}  // namespace

BENCHMARK(BM_EvalJet2D);
BENCHMARK(BM_EvalJet3D);
BENCHMARK(BM_LossGradient)->Arg(1024)->Arg(2048)->Arg(4096)->Arg(8192)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvexNetWidth)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
