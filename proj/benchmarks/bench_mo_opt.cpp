#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ssidepth/mo_opt.hpp"
#include "ssidepth/random.hpp"

namespace {

using namespace ssidepth;

void BM_MinNormFw(benchmark::State& state) {
  const auto tasks = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  std::vector<TaskGradient> grads;
  for (std::size_t l = 0; l < tasks; ++l) {
    TaskGradient g{"d" + std::to_string(l), std::vector<double>(dim)};
    for (double& v : g.g) v = rng.normal();
    grads.push_back(std::move(g));
  }
  for (auto _ : state) benchmark::DoNotOptimize(min_norm_fw(grads));
}

}  // namespace

BENCHMARK(BM_MinNormFw)->Args({2, 1000})->Args({3, 1000})->Args({5, 100000});
