#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "ssidepth/mo_opt.hpp"

using namespace ssidepth;

namespace {

std::vector<TaskGradient> tasks(const std::vector<std::vector<double>>& raw) {
  std::vector<TaskGradient> out;
  for (std::size_t l = 0; l < raw.size(); ++l) out.push_back({"d" + std::to_string(l), raw[l]});
  return out;
}

void expect_simplex(const SimplexWeights& w, std::size_t n) {
  ASSERT_EQ(w.alpha.size(), n);
  for (double a : w.alpha) EXPECT_GE(a, 0.0);
  EXPECT_NEAR(std::accumulate(w.alpha.begin(), w.alpha.end(), 0.0), 1.0, 1e-12);
}

}  // namespace

TEST(MinNorm2, Examples) {
  const std::vector<double> e1{1, 0}, e2{0, 1};
  auto w = min_norm_2(e1, e2);
  EXPECT_NEAR(w.alpha[0], 0.5, 1e-15);
  EXPECT_NEAR(w.alpha[1], 0.5, 1e-15);
  const std::vector<double> a{1, 0}, b{-1, 0};
  w = min_norm_2(a, b);
  EXPECT_NEAR(w.alpha[0], 0.5, 1e-15);
  const std::vector<double> small{1, 0}, big{3, 0};
  w = min_norm_2(small, big);
  EXPECT_EQ(w.alpha[0], 1.0);
  EXPECT_EQ(w.alpha[1], 0.0);
  w = min_norm_2(a, a);
  EXPECT_EQ(w.alpha[0], 0.5);
}

TEST(MinNormFw, SingleTaskAndOrthogonalBasis) {
  auto w = min_norm_fw(tasks({{3, 4}}));
  expect_simplex(w, 1);
  w = min_norm_fw(tasks({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  expect_simplex(w, 3);
  for (double a : w.alpha) EXPECT_NEAR(a, 1.0 / 3.0, 1e-6);
}

TEST(MinNormFw, ZeroInsideHull) {
  const auto t = tasks({{1, 0}, {-1, 1}, {-1, -1}});
  const auto w = min_norm_fw(t, {1000, 1e-14});
  expect_simplex(w, 3);
  EXPECT_LT(squared_norm(combine(t, w)), 1e-8);
}

TEST(MinNormFw, AgreesWithSimplexGridAndIsPermutationInvariant) {
  Rng rng(31);
  for (int n = 0; n < 50; ++n) {
    const std::size_t L = 2 + rng.index(2);
    const std::size_t dim = 1 + rng.index(6);
    std::vector<std::vector<double>> raw(L, std::vector<double>(dim));
    for (auto& g : raw) {
      for (double& v : g) v = rng.normal();
    }
    const auto w = min_norm_fw(tasks(raw));
    expect_simplex(w, L);
    const double value = oracle::objective(raw, w.alpha);
    EXPECT_LE(value, oracle::simplex_grid_min(raw) + 1e-9);

    std::vector<std::size_t> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::vector<std::vector<double>> shuffled;
    for (std::size_t p : perm) shuffled.push_back(raw[p]);
    const auto w2 = min_norm_fw(tasks(shuffled));
    EXPECT_NEAR(oracle::objective(shuffled, w2.alpha), value, 1e-9);
  }
}

TEST(Combine, WeightedSum) {
  const auto t = tasks({{1, 2}, {3, 4}});
  const auto v = combine(t, SimplexWeights{{0.25, 0.75}});
  EXPECT_DOUBLE_EQ(v[0], 2.5);
  EXPECT_DOUBLE_EQ(v[1], 3.5);
  EXPECT_EQ(squared_norm(std::vector<double>{3, 4}), 25.0);
}
