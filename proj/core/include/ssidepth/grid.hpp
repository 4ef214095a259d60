#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ssidepth {

enum class Unit { disparity, inverse_depth, depth, flow_u, flow_v, dimensionless };

std::string_view to_string(Unit unit) noexcept;

// Dense row-major field of doubles. A default-constructed grid is 0x0 and only
// useful as a placeholder; every other constructor requires positive extents.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0,
       Unit unit = Unit::dimensionless);
  Grid(std::size_t rows, std::size_t cols, std::vector<double> values,
       Unit unit = Unit::dimensionless);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  Unit unit() const noexcept { return unit_; }
  void set_unit(Unit unit) noexcept { unit_ = unit; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool same_shape(std::size_t rows, std::size_t cols) const noexcept {
    return rows_ == rows && cols_ == cols;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  Unit unit_ = Unit::dimensionless;
};

// Per-pixel validity flags. count() is the number of valid pixels, M.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool fill = true);
  Mask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> flags);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return flags_.size(); }

  bool operator()(std::size_t r, std::size_t c) const { return flags_[r * cols_ + c] != 0; }
  bool operator[](std::size_t i) const { return flags_[i] != 0; }
  void set(std::size_t i, bool valid) { flags_[i] = valid ? 1 : 0; }
  void set(std::size_t r, std::size_t c, bool valid) { set(r * cols_ + c, valid); }

  std::size_t count() const noexcept;
  std::span<const std::uint8_t> flags() const noexcept { return flags_; }

  // Flat indices of valid pixels in ascending order.
  std::vector<std::size_t> valid_indices() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> flags_;
};

struct MaskedGrid {
  Grid grid;
  Mask mask;
};

enum class Axis { x, y };

// Throws a dimension error naming `context` unless the shapes agree.
void require_same_shape(const Grid& grid, const Mask& mask, std::string_view context);
void require_same_shape(const Grid& a, const Grid& b, std::string_view context);

// Forward difference along `axis` (value at i+1 minus value at i), same shape
// as the input. An output pixel is valid only if both participating pixels are
// valid; invalid outputs hold 0, including the whole last column (x) or row (y).
MaskedGrid finite_diff(const Grid& grid, const Mask& mask, Axis axis);

// Keeps pixels (stride*i, stride*j); output extents are ceil(extent / stride).
MaskedGrid subsample(const Grid& grid, const Mask& mask, std::size_t stride);

enum class Reduction { sum, mean, min, max, median, mean_abs_dev };

// Reduction over valid pixels. `center` is only read by mean_abs_dev, which
// returns (1/M) sum |v - center|. sum over an empty mask is 0; every other
// reduction throws an empty-mask error.
double masked_reduce(const Grid& grid, const Mask& mask, Reduction kind,
                     double center = 0.0);

// Valid values in ascending flat-index order.
std::vector<double> valid_values(const Grid& grid, const Mask& mask);

// Median of a value list; the midpoint of the two central values for even
// counts. The list is reordered.
double median_inplace(std::vector<double>& values);

}  // namespace ssidepth
