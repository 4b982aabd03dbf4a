// SPDX-License-Identifier: Apache-2.0
#include "earthforge/tiler.hpp"

#include <cstdint>
#include <cstdlib>

namespace earthforge {

void TilerConfig::validate() const {
  if (tile_size < 1) throw Error(ErrorKind::InvalidRange, "tile_size must be positive");
  if (min_tiles < 1 || max_tiles < min_tiles)
    throw Error(ErrorKind::InvalidRange, "need 1 <= min_tiles <= max_tiles, got " +
                                             std::to_string(min_tiles) + ".." +
                                             std::to_string(max_tiles));
}

std::vector<GridShape> candidate_grids(int min_tiles, int max_tiles) {
  if (min_tiles < 1 || max_tiles < min_tiles)
    throw Error(ErrorKind::InvalidRange, "need 1 <= min_tiles <= max_tiles");
  std::vector<GridShape> grids;
  for (int cols = 1; cols <= max_tiles; ++cols)
    for (int rows = 1; cols * rows <= max_tiles; ++rows)
      if (cols * rows >= min_tiles) grids.push_back({cols, rows});
  return grids;
}

GridShape select_grid(Index width, Index height, const TilerConfig& config) {
  config.validate();
  if (width < 1 || height < 1)
    throw Error(ErrorKind::InvalidArgument, "image dimensions must be >= 1");
  const auto grids = candidate_grids(config.min_tiles, config.max_tiles);

  // |c/r - w/h| = |c*h - r*w| / (r*h); comparing two candidates cancels h.
  const auto w = static_cast<std::int64_t>(width);
  const auto h = static_cast<std::int64_t>(height);
  const auto numerator = [&](const GridShape& g) { return std::llabs(g.cols * h - g.rows * w); };
  const auto tile_area = static_cast<__int128>(config.tile_size) * config.tile_size;
  const auto image_area2 = static_cast<__int128>(2) * w * h;

  GridShape best = grids.front();
  std::int64_t best_num = numerator(best);
  for (std::size_t i = 1; i < grids.size(); ++i) {
    const GridShape& g = grids[i];
    const std::int64_t num = numerator(g);
    const __int128 lhs = static_cast<__int128>(num) * best.rows;
    const __int128 rhs = static_cast<__int128>(best_num) * g.rows;
    if (lhs < rhs || (lhs == rhs && image_area2 > tile_area * g.tiles())) {
      best = g;
      best_num = num;
    }
  }
  return best;
}

TilePlan plan_tiles(Index width, Index height, const TilerConfig& config) {
  const GridShape grid = select_grid(width, height, config);
  TilePlan plan;
  plan.cols = grid.cols;
  plan.rows = grid.rows;
  plan.tile_size = config.tile_size;
  plan.source_width = width;
  plan.source_height = height;
  plan.resized_width = grid.cols * config.tile_size;
  plan.resized_height = grid.rows * config.tile_size;
  plan.crop_rects.reserve(static_cast<std::size_t>(grid.tiles()));
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c)
      plan.crop_rects.push_back(
          {c * config.tile_size, r * config.tile_size, config.tile_size, config.tile_size});
  plan.thumbnail_included = config.use_thumbnail && grid.tiles() > 1;
  return plan;
}

}  // namespace earthforge
