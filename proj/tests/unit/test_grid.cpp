#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "ssidepth/error.hpp"
#include "ssidepth/grid.hpp"
#include "ssidepth/io.hpp"

using namespace ssidepth;
namespace fs = std::filesystem;

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

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("ssidepth_grid_" + name);
}

}  // namespace

TEST(Grid, RejectsBadShapes) {
  EXPECT_EQ(kind_of([] { Grid(0, 3); }), ErrorKind::dimension);
  EXPECT_EQ(kind_of([] { Grid(2, 2, std::vector<double>{1, 2, 3}); }), ErrorKind::dimension);
  EXPECT_EQ(kind_of([] { Mask(2, 2, std::vector<std::uint8_t>{1}); }), ErrorKind::dimension);
}

TEST(FiniteDiff, ConstantGridHasZeroDifferences) {
  const Grid g(3, 4, 7.5);
  const Mask m(3, 4, true);
  const auto dx = finite_diff(g, m, Axis::x);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_EQ(dx.grid(r, c), 0.0);
      EXPECT_EQ(dx.mask(r, c), c + 1 < 4);
    }
  }
  const auto dy = finite_diff(g, m, Axis::y);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_FALSE(dy.mask(2, c));
  EXPECT_TRUE(dy.mask(1, 3));
}

TEST(FiniteDiff, RowExample) {
  const Grid g(1, 3, std::vector<double>{1, 3, 6});
  const auto d = finite_diff(g, Mask(1, 3, true), Axis::x);
  EXPECT_EQ(d.grid[0], 2.0);
  EXPECT_EQ(d.grid[1], 3.0);
  EXPECT_TRUE(d.mask[0]);
  EXPECT_TRUE(d.mask[1]);
  EXPECT_FALSE(d.mask[2]);
}

TEST(FiniteDiff, InvalidPixelInvalidatesBothNeighbours) {
  const Grid g(1, 4, std::vector<double>{1, 2, 4, 8});
  Mask m(1, 4, true);
  m.set(2, false);
  const auto d = finite_diff(g, m, Axis::x);
  EXPECT_TRUE(d.mask[0]);
  EXPECT_FALSE(d.mask[1]);
  EXPECT_FALSE(d.mask[2]);
  EXPECT_EQ(d.grid[1], 0.0);
}

TEST(FiniteDiff, AffineRampGivesConstantSlope) {
  Grid g(5, 6);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 6; ++c) g(r, c) = 1.5 * static_cast<double>(c) - 2.0;
  }
  const auto d = finite_diff(g, Mask(5, 6, true), Axis::x);
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    if (d.mask[i]) EXPECT_DOUBLE_EQ(d.grid[i], 1.5);
  }
}

TEST(FiniteDiff, ShapeMismatchIsDimensionError) {
  EXPECT_EQ(kind_of([] { finite_diff(Grid(2, 2), Mask(2, 3), Axis::x); }), ErrorKind::dimension);
}

TEST(Subsample, StrideOneIsIdentity) {
  ssidepth::Rng rng(1);
  const Grid g = oracle::random_grid(5, 7, rng);
  const Mask m = oracle::random_mask(5, 7, rng);
  const auto s = subsample(g, m, 1);
  EXPECT_EQ(s.grid.rows(), 5u);
  EXPECT_EQ(s.grid.cols(), 7u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(s.grid[i], g[i]);
    EXPECT_EQ(s.mask[i], m[i]);
  }
}

TEST(Subsample, PicksEvenPositions) {
  Grid g(4, 4);
  for (std::size_t i = 0; i < 16; ++i) g[i] = static_cast<double>(i);
  const auto s = subsample(g, Mask(4, 4, true), 2);
  ASSERT_EQ(s.grid.rows(), 2u);
  ASSERT_EQ(s.grid.cols(), 2u);
  EXPECT_EQ(s.grid(0, 0), g(0, 0));
  EXPECT_EQ(s.grid(0, 1), g(0, 2));
  EXPECT_EQ(s.grid(1, 0), g(2, 0));
  EXPECT_EQ(s.grid(1, 1), g(2, 2));
}

TEST(Subsample, CeilingExtents) {
  const auto s = subsample(Grid(5, 5), Mask(5, 5, true), 2);
  EXPECT_EQ(s.grid.rows(), 3u);
  EXPECT_EQ(s.grid.cols(), 3u);
}

TEST(Subsample, StrideBeyondBothExtentsIsDimensionError) {
  EXPECT_EQ(kind_of([] { subsample(Grid(3, 4), Mask(3, 4), 5); }), ErrorKind::dimension);
  EXPECT_EQ(kind_of([] { subsample(Grid(3, 4), Mask(3, 4), 0); }), ErrorKind::dimension);
  EXPECT_NO_THROW(subsample(Grid(3, 4), Mask(3, 4), 4));
}

TEST(MaskedReduce, MedianExamples) {
  const Grid odd(1, 5, std::vector<double>{5, 1, 4, 2, 3});
  EXPECT_EQ(masked_reduce(odd, Mask(1, 5, true), Reduction::median), 3.0);
  const Grid even(1, 4, std::vector<double>{4, 1, 3, 2});
  EXPECT_EQ(masked_reduce(even, Mask(1, 4, true), Reduction::median), 2.5);
}

TEST(MaskedReduce, EmptyMask) {
  const Grid g(2, 2, 1.0);
  const Mask none(2, 2, false);
  EXPECT_EQ(masked_reduce(g, none, Reduction::sum), 0.0);
  EXPECT_EQ(kind_of([&] { masked_reduce(g, none, Reduction::mean); }), ErrorKind::empty_mask);
  EXPECT_EQ(kind_of([&] { masked_reduce(g, none, Reduction::median); }), ErrorKind::empty_mask);
}

TEST(MaskedReduce, OtherKinds) {
  const Grid g(1, 4, std::vector<double>{1, -2, 10, 3});
  Mask m(1, 4, true);
  m.set(2, false);
  EXPECT_EQ(masked_reduce(g, m, Reduction::sum), 2.0);
  EXPECT_DOUBLE_EQ(masked_reduce(g, m, Reduction::mean), 2.0 / 3.0);
  EXPECT_EQ(masked_reduce(g, m, Reduction::min), -2.0);
  EXPECT_EQ(masked_reduce(g, m, Reduction::max), 3.0);
  EXPECT_DOUBLE_EQ(masked_reduce(g, m, Reduction::mean_abs_dev, 1.0), (0.0 + 3.0 + 2.0) / 3.0);
}

TEST(MaskedReduce, MedianMatchesSortOracle) {
  ssidepth::Rng rng(7);
  for (int n = 0; n < 300; ++n) {
    const std::size_t rows = 1 + rng.index(8);
    const std::size_t cols = 1 + rng.index(8);
    Grid g = oracle::random_grid(rows, cols, rng, -3.0, 3.0);
    // Some repeated values to exercise ties.
    for (std::size_t i = 0; i < g.size(); i += 3) g[i] = std::round(g[i]);
    const Mask m = oracle::random_mask(rows, cols, rng, 0.7, 1.0 / static_cast<double>(rows * cols));
    EXPECT_EQ(masked_reduce(g, m, Reduction::median), oracle::sorted_median(valid_values(g, m)));
  }
}

TEST(Pfm, RoundTripsFloatValues) {
  Grid g(3, 5, 0.0, Unit::disparity);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.25 * static_cast<double>(i) - 1.0;
  const auto path = temp_file("rt.pfm");
  write_pfm(path, g);
  const Grid back = read_pfm(path, Unit::disparity);
  ASSERT_EQ(back.rows(), 3u);
  ASSERT_EQ(back.cols(), 5u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(back[i], g[i]);
  EXPECT_EQ(back.unit(), Unit::disparity);
  fs::remove(path);
}

TEST(Pfm, HeaderAndBottomUpRows) {
  const Grid g(2, 1, std::vector<double>{1.0, 2.0});
  const auto path = temp_file("hdr.pfm");
  write_pfm(path, g);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string header = "Pf\n1 2\n-1.0\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + header.size(), sizeof first);
  EXPECT_EQ(first, 2.0f);  // bottom row first
  fs::remove(path);
}

TEST(Pfm, ReadsBigEndian) {
  const auto path = temp_file("be.pfm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "Pf\n2 1\n1.0\n";
    const unsigned char a[4] = {0x3f, 0x80, 0x00, 0x00};  // 1.0f
    const unsigned char b[4] = {0x40, 0x00, 0x00, 0x00};  // 2.0f
    out.write(reinterpret_cast<const char*>(a), 4);
    out.write(reinterpret_cast<const char*>(b), 4);
  }
  const Grid g = read_pfm(path);
  EXPECT_EQ(g[0], 1.0);
  EXPECT_EQ(g[1], 2.0);
  fs::remove(path);
}

TEST(Pfm, Errors) {
  EXPECT_EQ(kind_of([] { read_pfm("/nonexistent/x.pfm"); }), ErrorKind::io);
  const auto path = temp_file("bad.pfm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "PF\n2 1\n-1.0\n";
  }
  EXPECT_EQ(kind_of([&] { read_pfm(path); }), ErrorKind::parse);
  {
    std::ofstream out(path, std::ios::binary);
    out << "Pf\n4 4\n-1.0\nabc";
  }
  EXPECT_EQ(kind_of([&] { read_pfm(path); }), ErrorKind::parse);
  fs::remove(path);
}

TEST(Pgm, RoundTripAndNonzeroIsValid) {
  Mask m(2, 3, true);
  m.set(1, false);
  m.set(5, false);
  const auto path = temp_file("m.pgm");
  write_pgm_mask(path, m);
  const Mask back = read_pgm_mask(path);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(back[i], m[i]);
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# comment\n3 1\n255\n";
    const unsigned char px[3] = {0, 1, 200};
    out.write(reinterpret_cast<const char*>(px), 3);
  }
  const Mask c = read_pgm_mask(path);
  EXPECT_FALSE(c[0]);
  EXPECT_TRUE(c[1]);
  EXPECT_TRUE(c[2]);
  fs::remove(path);
}
