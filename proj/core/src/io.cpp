#include "ssidepth/io.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ssidepth/error.hpp"

namespace ssidepth {

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::io, "read failed: " + path.string());
  return bytes;
}

void write_all(const std::filesystem::path& path, const std::string& header,
               const std::vector<unsigned char>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot create " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

// Netpbm-style header tokenizer: whitespace separated, '#' comments to EOL.
class HeaderReader {
 public:
  HeaderReader(const std::vector<unsigned char>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) fail("truncated header");
    return out;
  }

  long long integer() {
    const std::string t = token();
    try {
      std::size_t used = 0;
      const long long v = std::stoll(t, &used);
      if (used != t.size()) fail("bad integer '" + t + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad integer '" + t + "'");
    }
  }

  double real() {
    const std::string t = token();
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) fail("bad number '" + t + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad number '" + t + "'");
    }
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("missing raster separator");
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorKind::parse, path_.string() + ": " + why);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

std::size_t checked_extent(long long v, HeaderReader& header) {
  if (v <= 0 || v > (1LL << 20)) header.fail("bad image extent " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

}  // namespace

Grid read_pfm(const std::filesystem::path& path, Unit unit) {
  const auto bytes = read_all(path);
  HeaderReader header(bytes, path);
  const std::string magic = header.token();
  if (magic == "PF") header.fail("three-channel PFM is not supported");
  if (magic != "Pf") header.fail("not a PFM file (magic '" + magic + "')");
  const std::size_t cols = checked_extent(header.integer(), header);
  const std::size_t rows = checked_extent(header.integer(), header);
  const double scale = header.real();
  if (scale == 0.0) header.fail("zero scale header");
  const bool big_endian = scale > 0.0;
  const std::size_t offset = header.raster_offset();

  const std::size_t n = rows * cols;
  if (bytes.size() - offset < n * 4) header.fail("truncated raster");

  std::vector<double> values(n);
  for (std::size_t file_row = 0; file_row < rows; ++file_row) {
    const std::size_t r = rows - 1 - file_row;
    for (std::size_t c = 0; c < cols; ++c) {
      const unsigned char* p = bytes.data() + offset + (file_row * cols + c) * 4;
      std::uint32_t bits = big_endian
          ? (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]}
          : (std::uint32_t{p[3]} << 24) | (std::uint32_t{p[2]} << 16) |
                (std::uint32_t{p[1]} << 8) | std::uint32_t{p[0]};
      values[r * cols + c] = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  return Grid(rows, cols, std::move(values), unit);
}

void write_pfm(const std::filesystem::path& path, const Grid& grid) {
  if (grid.size() == 0) throw Error(ErrorKind::dimension, "write_pfm: empty grid");
  const std::string header =
      "Pf\n" + std::to_string(grid.cols()) + " " + std::to_string(grid.rows()) + "\n-1.0\n";
  std::vector<unsigned char> payload(grid.size() * 4);
  std::size_t k = 0;
  for (std::size_t file_row = 0; file_row < grid.rows(); ++file_row) {
    const std::size_t r = grid.rows() - 1 - file_row;
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(grid(r, c)));
      payload[k++] = static_cast<unsigned char>(bits & 0xFF);
      payload[k++] = static_cast<unsigned char>((bits >> 8) & 0xFF);
      payload[k++] = static_cast<unsigned char>((bits >> 16) & 0xFF);
      payload[k++] = static_cast<unsigned char>((bits >> 24) & 0xFF);
    }
  }
  write_all(path, header, payload);
}

Mask read_pgm_mask(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  HeaderReader header(bytes, path);
  const std::string magic = header.token();
  if (magic != "P5") header.fail("not a binary PGM file (magic '" + magic + "')");
  const std::size_t cols = checked_extent(header.integer(), header);
  const std::size_t rows = checked_extent(header.integer(), header);
  const long long maxval = header.integer();
  if (maxval <= 0 || maxval > 255) header.fail("only 8-bit PGM masks are supported");
  const std::size_t offset = header.raster_offset();
  const std::size_t n = rows * cols;
  if (bytes.size() - offset < n) header.fail("truncated raster");

  std::vector<std::uint8_t> flags(n);
  for (std::size_t i = 0; i < n; ++i) flags[i] = bytes[offset + i] != 0 ? 1 : 0;
  return Mask(rows, cols, std::move(flags));
}

void write_pgm_mask(const std::filesystem::path& path, const Mask& mask) {
  if (mask.size() == 0) throw Error(ErrorKind::dimension, "write_pgm_mask: empty mask");
  const std::string header =
      "P5\n" + std::to_string(mask.cols()) + " " + std::to_string(mask.rows()) + "\n255\n";
  std::vector<unsigned char> payload(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) payload[i] = mask[i] ? 255 : 0;
  write_all(path, header, payload);
}

}  // namespace ssidepth
