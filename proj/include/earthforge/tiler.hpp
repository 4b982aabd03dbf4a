// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <vector>

#include "earthforge/raster.hpp"
#include "earthforge/resample.hpp"

namespace earthforge {

struct TilerConfig {
  Index tile_size = 448;
  int min_tiles = 1;
  int max_tiles = 12;
  bool use_thumbnail = true;

  static TilerConfig training() { return {}; }
  static TilerConfig inference() { return {448, 1, 40, true}; }

  /// Throws InvalidRange.
  void validate() const;
};

struct GridShape {
  int cols = 1;
  int rows = 1;

  int tiles() const noexcept { return cols * rows; }
  GridShape transposed() const noexcept { return {rows, cols}; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
  friend auto operator<=>(const GridShape&, const GridShape&) = default;
};

struct CropRect {
  Index x = 0;
  Index y = 0;
  Index w = 0;
  Index h = 0;
  friend bool operator==(const CropRect&, const CropRect&) = default;
};

struct TilePlan {
  int cols = 1;
  int rows = 1;
  Index tile_size = 448;
  Index source_width = 0;
  Index source_height = 0;
  Index resized_width = 0;
  Index resized_height = 0;
  std::vector<CropRect> crop_rects;  // row-major
  bool thumbnail_included = false;

  int tile_count() const noexcept { return cols * rows; }
  /// Crops plus the thumbnail, i.e. the number of images `crop` returns.
  int image_count() const noexcept { return tile_count() + (thumbnail_included ? 1 : 0); }
};

/// Every (cols, rows) with min_tiles <= cols*rows <= max_tiles, ordered by
/// cols then rows.
std::vector<GridShape> candidate_grids(int min_tiles, int max_tiles);

/// Grid whose cols/rows is closest to width/height. Equal distances keep the
/// earlier candidate unless the image area exceeds half the candidate's
/// resized area, in which case the larger grid wins. Distances are compared
/// exactly in integer arithmetic.
GridShape select_grid(Index width, Index height, const TilerConfig& config);

TilePlan plan_tiles(Index width, Index height, const TilerConfig& config);

template <typename Scalar>
TilePlan plan_tiles(const BasicRaster<Scalar>& raster, const TilerConfig& config) {
  return plan_tiles(raster.width(), raster.height(), config);
}

/// Tiles in row-major order, thumbnail last when the plan includes one.
template <typename Scalar>
std::vector<BasicRaster<Scalar>> crop(const BasicRaster<Scalar>& raster, const TilePlan& plan) {
  if (raster.width() != plan.source_width || raster.height() != plan.source_height)
    throw Error(ErrorKind::DimensionMismatch,
                "plan was made for " + std::to_string(plan.source_width) + "x" +
                    std::to_string(plan.source_height) + ", raster is " +
                    std::to_string(raster.width()) + "x" + std::to_string(raster.height()));
  std::vector<BasicRaster<Scalar>> out;
  out.reserve(static_cast<std::size_t>(plan.image_count()));
  const auto resized = resize_bilinear(raster, plan.resized_width, plan.resized_height);
  for (const auto& r : plan.crop_rects) out.push_back(crop_region(resized, r.x, r.y, r.w, r.h));
  if (plan.thumbnail_included)
    out.push_back(resize_bilinear(raster, plan.tile_size, plan.tile_size));
  return out;
}

}  // namespace earthforge
