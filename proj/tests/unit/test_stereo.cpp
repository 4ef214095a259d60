#include <gtest/gtest.h>

#include "ssidepth/error.hpp"
#include "ssidepth/random.hpp"
#include "ssidepth/stereo.hpp"

using namespace ssidepth;

namespace {

FlowField flow(std::size_t rows, std::size_t cols, double u, double v = 0.0) {
  return {Grid(rows, cols, u, Unit::flow_u), Grid(rows, cols, v, Unit::flow_v)};
}

// Row-constant disparity ramp from lo to hi with the matching reverse flow.
std::pair<FlowField, FlowField> ramp(std::size_t rows, std::size_t cols, double lo, double hi) {
  FlowField lr = flow(rows, cols, 0.0);
  FlowField rl = flow(rows, cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double d = lo + (hi - lo) * static_cast<double>(r) / static_cast<double>(rows - 1);
    for (std::size_t c = 0; c < cols; ++c) {
      lr.u(r, c) = -d;
      rl.u(r, c) = d;
    }
  }
  return {lr, rl};
}

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

TEST(LrConsistency, ZeroFlowAllValid) {
  const Mask m = lr_consistency(flow(4, 6, 0.0), flow(4, 6, 0.0));
  EXPECT_EQ(m.count(), 24u);
}

TEST(LrConsistency, UncancelledFlowInvalid) {
  const Mask m = lr_consistency(flow(4, 20, 5.0), flow(4, 20, 0.0));
  EXPECT_EQ(m.count(), 0u);
}

TEST(LrConsistency, OutOfBoundsTargetsInvalid) {
  const Mask m = lr_consistency(flow(1, 10, 3.0), flow(1, 10, -3.0));
  for (std::size_t c = 0; c < 10; ++c) EXPECT_EQ(m[c], c + 3 <= 9) << c;
}

TEST(LrConsistency, BilinearSampling) {
  FlowField lr = flow(1, 4, 0.5);
  FlowField rl = flow(1, 4, 0.0);
  rl.u[0] = 0.0;
  rl.u[1] = -2.0;
  // Target of x = 0 is 0.5, sampled value -1.0, residual |0.5 - 1.0| = 0.5.
  EXPECT_TRUE(lr_consistency(lr, rl, 0.5)[0]);
  EXPECT_FALSE(lr_consistency(lr, rl, 0.49)[0]);
  EXPECT_EQ(kind_of([] { lr_consistency(flow(2, 2, 0), flow(2, 3, 0)); }), ErrorKind::dimension);
}

TEST(LrConsistency, SymmetricUnderNegationWithMirroring) {
  Rng rng(51);
  const std::size_t rows = 5, cols = 17;
  FlowField lr = flow(rows, cols, 0.0), rl = flow(rows, cols, 0.0);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    lr.u[i] = rng.uniform(-4.0, 4.0);
    rl.u[i] = rng.uniform(-4.0, 4.0);
  }
  FlowField lr2 = lr, rl2 = rl;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      lr2.u(r, c) = -lr.u(r, cols - 1 - c);
      rl2.u(r, c) = -rl.u(r, cols - 1 - c);
    }
  }
  const Mask a = lr_consistency(lr, rl, 2.0);
  const Mask b = lr_consistency(lr2, rl2, 2.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) EXPECT_EQ(a(r, c), b(r, cols - 1 - c));
  }
}

TEST(FrameQuality, CleanFrameAccepted) {
  const auto [lr, rl] = ramp(40, 200, 1.0, 21.0);
  const auto q = frame_quality(lr, rl);
  EXPECT_TRUE(q.accepted);
  EXPECT_TRUE(q.reject_reasons.empty());
  EXPECT_NEAR(q.horizontal_range, 20.0, 1e-12);
}

TEST(FrameQuality, EachRuleFiresAlone) {
  {
    auto [lr, rl] = ramp(40, 200, 1.0, 21.0);
    for (std::size_t i = 0; i < 40 * 200 * 15 / 100; ++i) lr.v[i] = 3.0;
    const auto q = frame_quality(lr, rl);
    ASSERT_EQ(q.reject_reasons.size(), 1u);
    EXPECT_EQ(q.reject_reasons[0], RejectReason::vertical_disparity);
    EXPECT_NEAR(q.vertical_violation_fraction, 0.15, 1e-12);
  }
  {
    const auto [lr, rl] = ramp(40, 200, 1.0, 6.0);
    const auto q = frame_quality(lr, rl);
    ASSERT_EQ(q.reject_reasons.size(), 1u);
    EXPECT_EQ(q.reject_reasons[0], RejectReason::horizontal_range);
  }
  {
    auto [lr, rl] = ramp(40, 200, 1.0, 21.0);
    for (std::size_t r = 0; r < 40; ++r) {
      for (std::size_t c = 0; c < 80; ++c) rl.u(r, c) = 50.0;
    }
    const auto q = frame_quality(lr, rl);
    ASSERT_EQ(q.reject_reasons.size(), 1u);
    EXPECT_EQ(q.reject_reasons[0], RejectReason::lr_pass_rate);
  }
}

TEST(FrameQuality, NoConsistentPixels) {
  const auto q = frame_quality(flow(4, 20, 5.0), flow(4, 20, 0.0));
  EXPECT_EQ(q.horizontal_range, 0.0);
  EXPECT_EQ(q.lr_pass_rate, 0.0);
  EXPECT_FALSE(q.accepted);
  EXPECT_EQ(q.reject_reasons.back(), RejectReason::lr_pass_rate);
}

TEST(FrameQuality, ShiftInvariantWithConstantReverseFlow) {
  Rng rng(52);
  FlowField lr = flow(10, 60, 0.0), rl = flow(10, 60, -3.0);
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t c = 0; c < 60; ++c) lr.u(r, c) = 3.0 + rng.uniform(-2.5, 2.5) * (r % 3);
  }
  for (double c : {-1.5, 0.75, 4.0}) {
    FlowField lr2 = lr, rl2 = rl;
    for (double& v : lr2.u.values()) v += c;
    for (double& v : rl2.u.values()) v -= c;
    const Mask a = lr_consistency(lr, rl);
    const Mask b = lr_consistency(lr2, rl2);
    // Compare only pixels whose warp target stays in bounds under both flows.
    for (std::size_t r = 0; r < 10; ++r) {
      for (std::size_t x = 0; x < 60; ++x) {
        const double t1 = x + lr.u(r, x), t2 = x + lr2.u(r, x);
        if (t1 >= 0 && t1 <= 59 && t2 >= 0 && t2 <= 59) EXPECT_EQ(a(r, x), b(r, x));
      }
    }
  }
  // A frame whose warps stay inside: identical gate outcomes.
  const auto [clr, crl] = ramp(20, 100, 1.0, 21.0);
  FlowField s_lr = clr, s_rl = crl;
  for (double& v : s_lr.u.values()) v += 1.0;
  for (double& v : s_rl.u.values()) v -= 1.0;
  const auto q1 = frame_quality(clr, crl);
  const auto q2 = frame_quality(s_lr, s_rl);
  EXPECT_EQ(q1.accepted, q2.accepted);
  EXPECT_EQ(q1.reject_reasons, q2.reject_reasons);
}

TEST(SkyMask, Examples) {
  const Grid d(1, 4, std::vector<double>{0.5, 0.01, 0.3, 0.9});
  Mask valid(1, 4, true);
  const auto same = apply_sky_mask(d, valid, Mask(1, 4, false));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(same.disp[i], d[i]);
  Mask sky(1, 4, false);
  sky.set(3, true);
  valid.set(3, false);
  const auto out = apply_sky_mask(d, valid, sky);
  EXPECT_EQ(out.disp[3], 0.01);
  EXPECT_TRUE(out.mask[3]);
  EXPECT_EQ(kind_of([&] { apply_sky_mask(d, valid, Mask(1, 4, true)); }), ErrorKind::empty_mask);
}

TEST(NormalizeUnit, Examples) {
  const Grid d(1, 3, std::vector<double>{2, 4, 6});
  const Grid n = normalize_unit(d, Mask(1, 3, true));
  EXPECT_EQ(n[0], 0.0);
  EXPECT_EQ(n[1], 0.5);
  EXPECT_EQ(n[2], 1.0);
  const Grid again = normalize_unit(n, Mask(1, 3, true));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(again[i], n[i]);
  EXPECT_EQ(kind_of([] { normalize_unit(Grid(2, 2, 3.0), Mask(2, 2, true)); }),
            ErrorKind::degenerate_range);
}

TEST(NormalizeUnit, ExactUnitSpan) {
  Rng rng(53);
  Grid d(6, 6);
  for (double& v : d.values()) v = rng.uniform(-7.0, 13.0);
  const Grid n = normalize_unit(d, Mask(6, 6, true));
  double lo = 1.0, hi = 0.0;
  for (double v : n.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
}
