#include "ssidepth/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssidepth/error.hpp"

namespace ssidepth {

namespace {

void require_positive(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw Error(ErrorKind::dimension, "grid extents must be positive, got " +
                                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

std::string shape_string(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace

std::string_view to_string(Unit unit) noexcept {
  switch (unit) {
    case Unit::disparity: return "disparity";
    case Unit::inverse_depth: return "inverse_depth";
    case Unit::depth: return "depth";
    case Unit::flow_u: return "flow_u";
    case Unit::flow_v: return "flow_v";
    case Unit::dimensionless: return "dimensionless";
  }
  return "unknown";
}

Grid::Grid(std::size_t rows, std::size_t cols, double fill, Unit unit)
    : rows_(rows), cols_(cols), unit_(unit) {
  require_positive(rows, cols);
  values_.assign(rows * cols, fill);
}

Grid::Grid(std::size_t rows, std::size_t cols, std::vector<double> values, Unit unit)
    : rows_(rows), cols_(cols), values_(std::move(values)), unit_(unit) {
  require_positive(rows, cols);
  if (values_.size() != rows * cols) {
    throw Error(ErrorKind::dimension, "grid of shape " + shape_string(rows, cols) + " given " +
                                          std::to_string(values_.size()) + " values");
  }
}

Mask::Mask(std::size_t rows, std::size_t cols, bool fill) : rows_(rows), cols_(cols) {
  require_positive(rows, cols);
  flags_.assign(rows * cols, fill ? 1 : 0);
}

Mask::Mask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> flags)
    : rows_(rows), cols_(cols), flags_(std::move(flags)) {
  require_positive(rows, cols);
  if (flags_.size() != rows * cols) {
    throw Error(ErrorKind::dimension, "mask of shape " + shape_string(rows, cols) + " given " +
                                          std::to_string(flags_.size()) + " flags");
  }
  for (auto& f : flags_) f = f != 0 ? 1 : 0;
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> Mask::valid_indices() const {
  std::vector<std::size_t> out;
  out.reserve(flags_.size());
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (flags_[i] != 0) out.push_back(i);
  }
  return out;
}

void require_same_shape(const Grid& grid, const Mask& mask, std::string_view context) {
  if (grid.rows() != mask.rows() || grid.cols() != mask.cols()) {
    throw Error(ErrorKind::dimension,
                std::string(context) + ": grid " + shape_string(grid.rows(), grid.cols()) +
                    " vs mask " + shape_string(mask.rows(), mask.cols()));
  }
}

void require_same_shape(const Grid& a, const Grid& b, std::string_view context) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::dimension, std::string(context) + ": grid " +
                                          shape_string(a.rows(), a.cols()) + " vs " +
                                          shape_string(b.rows(), b.cols()));
  }
}

MaskedGrid finite_diff(const Grid& grid, const Mask& mask, Axis axis) {
  require_same_shape(grid, mask, "finite_diff");
  const std::size_t rows = grid.rows();
  const std::size_t cols = grid.cols();
  MaskedGrid out{Grid(rows, cols, 0.0, grid.unit()), Mask(rows, cols, false)};
  const std::size_t step = axis == Axis::x ? 1 : cols;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const bool has_next = axis == Axis::x ? c + 1 < cols : r + 1 < rows;
      if (!has_next) continue;
      const std::size_t i = r * cols + c;
      if (mask[i] && mask[i + step]) {
        out.grid[i] = grid[i + step] - grid[i];
        out.mask.set(i, true);
      }
    }
  }
  return out;
}

MaskedGrid subsample(const Grid& grid, const Mask& mask, std::size_t stride) {
  require_same_shape(grid, mask, "subsample");
  if (stride == 0) throw Error(ErrorKind::dimension, "subsample: stride must be >= 1");
  if (stride > grid.rows() && stride > grid.cols()) {
    throw Error(ErrorKind::dimension, "subsample: stride " + std::to_string(stride) +
                                          " exceeds both extents of " +
                                          shape_string(grid.rows(), grid.cols()));
  }
  const std::size_t rows = (grid.rows() + stride - 1) / stride;
  const std::size_t cols = (grid.cols() + stride - 1) / stride;
  MaskedGrid out{Grid(rows, cols, 0.0, grid.unit()), Mask(rows, cols, false)};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out.grid(r, c) = grid(r * stride, c * stride);
      out.mask.set(r, c, mask(r * stride, c * stride));
    }
  }
  return out;
}

std::vector<double> valid_values(const Grid& grid, const Mask& mask) {
  require_same_shape(grid, mask, "valid_values");
  std::vector<double> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (mask[i]) out.push_back(grid[i]);
  }
  return out;
}

double median_inplace(std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorKind::empty_mask, "median of an empty set");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double masked_reduce(const Grid& grid, const Mask& mask, Reduction kind, double center) {
  std::vector<double> v = valid_values(grid, mask);
  if (kind == Reduction::sum) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  if (v.empty()) throw Error(ErrorKind::empty_mask, "masked_reduce: no valid pixels");
  switch (kind) {
    case Reduction::mean: {
      double acc = 0.0;
      for (double x : v) acc += x;
      return acc / static_cast<double>(v.size());
    }
    case Reduction::min: return *std::min_element(v.begin(), v.end());
    case Reduction::max: return *std::max_element(v.begin(), v.end());
    case Reduction::median: return median_inplace(v);
    case Reduction::mean_abs_dev: {
      double acc = 0.0;
      for (double x : v) acc += std::abs(x - center);
      return acc / static_cast<double>(v.size());
    }
    case Reduction::sum: break;
  }
  return 0.0;
}

}  // namespace ssidepth
