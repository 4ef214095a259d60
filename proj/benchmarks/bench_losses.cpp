#include <benchmark/benchmark.h>

#include "ssidepth/grid.hpp"
#include "ssidepth/losses.hpp"
#include "ssidepth/random.hpp"

namespace {

using namespace ssidepth;

struct Inputs {
  Grid pred;
  Grid gt;
  Mask mask;
};

Inputs make_inputs(std::size_t n) {
  Rng rng(1);
  Grid pred(n, n), gt(n, n);
  for (double& v : pred.values()) v = rng.uniform(0.1, 2.0);
  for (double& v : gt.values()) v = rng.uniform(0.1, 2.0);
  Mask mask(n, n, true);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.set(i, rng.uniform() < 0.9);
  return {std::move(pred), std::move(gt), std::move(mask)};
}

void BM_Ssimse(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ssimse(in.pred, in.gt, in.mask));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_Ssitrim(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ssitrim(in.pred, in.gt, in.mask));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_TotalLoss(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(in.pred, in.gt, in.mask, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_Nmg(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nmg(in.pred, in.gt, in.mask, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_Ordinal(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ordinal(in.pred, in.gt, in.mask, {}));
}

}  // namespace

BENCHMARK(BM_Ssimse)->Arg(64)->Arg(384);
BENCHMARK(BM_Ssitrim)->Arg(64)->Arg(384);
BENCHMARK(BM_TotalLoss)->Arg(64)->Arg(384);
BENCHMARK(BM_Nmg)->Arg(64)->Arg(384);
BENCHMARK(BM_Ordinal)->Arg(64)->Arg(384);
