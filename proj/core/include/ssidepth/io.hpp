#pragma once

#include <filesystem>

#include "ssidepth/grid.hpp"

namespace ssidepth {

// Single-channel portable float map ("Pf"). Rows are stored bottom-to-top as
// the format prescribes. The writer always emits little-endian data with a
// scale header of -1.0; the reader accepts either byte order. Values are
// narrowed to float32 on write.
Grid read_pfm(const std::filesystem::path& path, Unit unit = Unit::dimensionless);
void write_pfm(const std::filesystem::path& path, const Grid& grid);

// Binary 8-bit greyscale PGM ("P5"); any nonzero sample marks a valid pixel.
// The writer stores 255 for valid and 0 for invalid pixels.
Mask read_pgm_mask(const std::filesystem::path& path);
void write_pgm_mask(const std::filesystem::path& path, const Mask& mask);

}  // namespace ssidepth
