// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "earthforge/raster.hpp"

namespace earthforge {

struct RasterLoadOptions {
  Modality modality = Modality::HrRgb05;
  /// Used for formats that do not store one (PNG).
  double gsd = 0.5;
};

/// `.bgrid` layout (all little-endian):
///   "BGRD" | u32 width | u32 height | u32 bands | f32 gsd
///   | f32 data, band-major, each band row-major (height x width)
///   | nodata bitmask, ceil(width*height/8) bytes, pixel i -> byte i/8 bit i%8
///     (LSB first), 1 = invalid.
Raster load_bgrid(const std::filesystem::path& path, const RasterLoadOptions& options = {});
void save_bgrid(const Raster& raster, const std::filesystem::path& path);

/// 8-bit grey, RGB or RGBA PNG; samples are divided by 255. Every pixel is
/// valid. Grey+alpha is rejected.
Raster load_png(const std::filesystem::path& path, const RasterLoadOptions& options = {});
/// 1, 3 or 4 band raster written as 8-bit PNG (rounded to nearest).
void save_png(const Raster& raster, const std::filesystem::path& path);

/// Dispatches on extension: ".bgrid" or ".png".
Raster load_raster(const std::filesystem::path& path, const RasterLoadOptions& options = {});

}  // namespace earthforge
