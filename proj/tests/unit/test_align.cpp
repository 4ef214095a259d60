#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "ssidepth/align.hpp"
#include "ssidepth/error.hpp"

using namespace ssidepth;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ssidepth::Error thrown";
  return ErrorKind::io;
}

}  // namespace

TEST(LsqAlign, IdentityWhenPredEqualsGt) {
  const Grid g(1, 4, std::vector<double>{0.5, 1.0, 3.0, -2.0});
  const auto a = lsq_align(g, g, Mask(1, 4, true));
  EXPECT_NEAR(a.scale, 1.0, 1e-14);
  EXPECT_NEAR(a.shift, 0.0, 1e-14);
}

TEST(LsqAlign, TwoPixelExample) {
  const Grid pred(1, 2, std::vector<double>{1, 2});
  const Grid gt(1, 2, std::vector<double>{3, 5});
  const auto a = lsq_align(pred, gt, Mask(1, 2, true));
  EXPECT_NEAR(a.scale, 2.0, 1e-14);
  EXPECT_NEAR(a.shift, 1.0, 1e-14);
}

TEST(LsqAlign, Errors) {
  EXPECT_EQ(kind_of([] { lsq_align(Grid(2, 2, 7.0), Grid(2, 2, 1.0), Mask(2, 2, true)); }),
            ErrorKind::degenerate_alignment);
  Mask one(2, 2, false);
  one.set(0, true);
  EXPECT_EQ(kind_of([&] { lsq_align(Grid(2, 2, 1.0), Grid(2, 2, 1.0), one); }),
            ErrorKind::insufficient_data);
  EXPECT_EQ(kind_of([] { lsq_align(Grid(2, 2), Grid(2, 3), Mask(2, 2)); }), ErrorKind::dimension);
}

TEST(LsqAlign, RecoversAffineImage) {
  ssidepth::Rng rng(3);
  const Grid pred = oracle::random_grid(6, 6, rng);
  Grid gt = pred;
  for (double& v : gt.values()) v = -0.7 * v + 4.25;
  const Mask m = oracle::random_mask(6, 6, rng);
  const Grid aligned = apply_alignment(pred, lsq_align(pred, gt, m));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (m[i]) EXPECT_NEAR(aligned[i], gt[i], 1e-12);
  }
}

TEST(LsqAlign, MatchesGridSearchOracle) {
  ssidepth::Rng rng(4);
  for (int n = 0; n < 5; ++n) {
    const Grid pred = oracle::random_grid(4, 4, rng, -1.0, 1.0);
    Grid gt = oracle::random_grid(4, 4, rng, -1.0, 1.0);
    for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += 1.5 * pred[i];
    const Mask m(4, 4, true);
    const auto a = lsq_align(pred, gt, m);
    const double mine = oracle::lsq_cost(pred, gt, m, a.scale, a.shift);
    const auto fit = oracle::grid_search_lsq(pred, gt, m);
    EXPECT_LE(mine, fit.cost + 1e-12);
    EXPECT_NEAR(a.scale, fit.s, 1e-3);
    EXPECT_NEAR(a.shift, fit.t, 1e-3);
  }
}

TEST(ApplyAlignment, Examples) {
  const Grid g(1, 2, std::vector<double>{0, 1}, Unit::disparity);
  const Grid id = apply_alignment(g, {1.0, 0.0});
  EXPECT_EQ(id[0], 0.0);
  EXPECT_EQ(id[1], 1.0);
  const Grid out = apply_alignment(g, {2.0, 1.0});
  EXPECT_EQ(out[0], 1.0);
  EXPECT_EQ(out[1], 3.0);
  EXPECT_EQ(out.unit(), Unit::disparity);
  const Grid twice = apply_alignment(apply_alignment(g, {2.0, 0.0}), {1.0, -0.0});
  EXPECT_EQ(twice[1], 2.0);
}

TEST(RobustStats, Examples) {
  const Grid g(1, 5, std::vector<double>{1, 2, 3, 4, 5});
  const auto s = robust_stats(g, Mask(1, 5, true));
  EXPECT_EQ(s.shift, 3.0);
  EXPECT_DOUBLE_EQ(s.scale, 1.2);
  const auto c = robust_stats(Grid(2, 2, 4.0), Mask(2, 2, true));
  EXPECT_EQ(c.shift, 4.0);
  EXPECT_EQ(c.scale, 0.0);
  const auto p = robust_stats(Grid(1, 2, std::vector<double>{0, 10}), Mask(1, 2, true));
  EXPECT_EQ(p.shift, 5.0);
  EXPECT_EQ(p.scale, 5.0);
  EXPECT_EQ(kind_of([] { robust_stats(Grid(1, 2), Mask(1, 2, false)); }), ErrorKind::empty_mask);
}

TEST(RobustNormalize, Example) {
  const Grid g(1, 5, std::vector<double>{1, 2, 3, 4, 5});
  const Grid n = robust_normalize(g, Mask(1, 5, true));
  const double expect[5] = {-5.0 / 3.0, -5.0 / 6.0, 0.0, 5.0 / 6.0, 5.0 / 3.0};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(n[i], expect[i], 1e-15);
  EXPECT_EQ(kind_of([] { robust_normalize(Grid(2, 2, 1.0), Mask(2, 2, true)); }),
            ErrorKind::degenerate_scale);
}

TEST(RobustNormalize, ZeroMedianUnitDeviationAndIdempotent) {
  ssidepth::Rng rng(5);
  for (int n = 0; n < 50; ++n) {
    const Grid g = oracle::random_grid(5, 6, rng, -4.0, 9.0);
    const Mask m = oracle::random_mask(5, 6, rng);
    const Grid once = robust_normalize(g, m);
    const auto s = robust_stats(once, m);
    EXPECT_NEAR(s.shift, 0.0, 1e-12);
    EXPECT_NEAR(s.scale, 1.0, 1e-12);
    const Grid twice = robust_normalize(once, m);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (m[i]) EXPECT_NEAR(twice[i], once[i], 1e-12);
    }
  }
}

TEST(RobustNormalize, AffineEquivariance) {
  ssidepth::Rng rng(6);
  for (int n = 0; n < 50; ++n) {
    const Grid g = oracle::random_grid(4, 7, rng);
    const Mask m = oracle::random_mask(4, 7, rng);
    double a = rng.uniform(0.2, 5.0);
    if (n % 2 == 1) a = -a;
    const double b = rng.uniform(-3.0, 3.0);
    Grid moved = g;
    for (double& v : moved.values()) v = a * v + b;
    const Grid x = robust_normalize(g, m);
    const Grid y = robust_normalize(moved, m);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (m[i]) EXPECT_NEAR(y[i], (a > 0 ? 1.0 : -1.0) * x[i], 1e-10);
    }
  }
}

TEST(MedianSupport, OddAndEven) {
  const Grid odd(1, 5, std::vector<double>{9, 1, 5, 3, 7});
  const auto o = median_support(odd, Mask(1, 5, true));
  EXPECT_EQ(o.lower, 2u);
  EXPECT_EQ(o.upper, 2u);
  const Grid even(1, 4, std::vector<double>{9, 1, 5, 3});
  const auto e = median_support(even, Mask(1, 4, true));
  EXPECT_EQ(e.lower, 3u);
  EXPECT_EQ(e.upper, 2u);
}
