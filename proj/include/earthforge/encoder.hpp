// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "earthforge/fusion.hpp"
#include "earthforge/raster.hpp"
#include "earthforge/tiler.hpp"

namespace earthforge {

/// Maps one square tile to a token grid. Stands in for a vision encoder so
/// the layout and fusion arithmetic can run without weights.
template <typename Scalar>
class TileEncoder {
 public:
  virtual ~TileEncoder() = default;
  virtual TokenGrid<Scalar> encode(const BasicRaster<Scalar>& tile, Provenance provenance) const = 0;
  /// Tokens produced per tile.
  virtual Index tokens_per_tile() const = 0;
};

/// side x side grid of per-band patch means over valid pixels (0 for a
/// patch with no valid pixel). Feature dimension = band count.
template <typename Scalar>
class PatchMeanEncoder final : public TileEncoder<Scalar> {
 public:
  explicit PatchMeanEncoder(Index side) : side_(side) {
    if (side < 1) throw Error(ErrorKind::InvalidArgument, "encoder grid side must be >= 1");
  }

  static PatchMeanEncoder for_tokens(Index tokens_per_tile) {
    const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(tokens_per_tile))));
    if (side * side != tokens_per_tile)
      throw Error(ErrorKind::InvalidArgument, "tokens_per_tile must be a perfect square");
    return PatchMeanEncoder(side);
  }

  Index tokens_per_tile() const override { return side_ * side_; }

  TokenGrid<Scalar> encode(const BasicRaster<Scalar>& tile, Provenance provenance) const override {
    if (tile.width() != tile.height() || tile.width() % side_ != 0)
      throw Error(ErrorKind::ShapeMismatch,
                  "tile " + std::to_string(tile.width()) + "x" + std::to_string(tile.height()) +
                      " cannot be split into a " + std::to_string(side_) + "x" +
                      std::to_string(side_) + " patch grid");
    const Index patch = tile.width() / side_;
    const auto valid = (!tile.mask()).template cast<double>();
    TokenMatrix<Scalar> values(side_ * side_, tile.band_count());
    for (Index r = 0; r < side_; ++r)
      for (Index c = 0; c < side_; ++c) {
        const double n = valid.block(r * patch, c * patch, patch, patch).sum();
        for (Index b = 0; b < tile.band_count(); ++b) {
          const double s = tile.mask()
                               .block(r * patch, c * patch, patch, patch)
                               .select(0.0, tile.band(b).block(r * patch, c * patch, patch, patch)
                                                .template cast<double>())
                               .sum();
          values(r * side_ + c, b) = static_cast<Scalar>(n > 0 ? s / n : 0.0);
        }
      }
    return TokenGrid<Scalar>(side_, side_, std::move(values), provenance);
  }

 private:
  Index side_;
};

/// Encodes one image. Three-band rasters are tiled (thumbnail last) and each
/// crop contributes tokens_per_tile tokens; other band counts are split into
/// channel triples, each resized to a single tile, encoded and fused.
template <typename Scalar>
TokenSequence<Scalar> encode_image(const BasicRaster<Scalar>& raster, const TilerConfig& tiler,
                                   const FusionConfig& fusion, const TileEncoder<Scalar>& encoder) {
  if (encoder.tokens_per_tile() != fusion.tokens_per_tile)
    throw Error(ErrorKind::ShapeMismatch, "encoder and fusion config disagree on tokens per tile");
  if (raster.band_count() == 3) {
    const TilePlan plan = plan_tiles(raster, tiler);
    const auto images = crop(raster, plan);
    TokenSequence<Scalar> seq;
    seq.tokens.resize(fusion.tokens_per_tile * static_cast<Index>(images.size()), raster.band_count());
    Index offset = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const Provenance p{static_cast<int>(i), 0, 0};
      const auto grid = encoder.encode(images[i], p);
      seq.tokens.middleRows(offset, grid.values.rows()) = grid.values;
      seq.layout.insert(seq.layout.end(), static_cast<std::size_t>(grid.values.rows()), p);
      offset += grid.values.rows();
    }
    return seq;
  }
  std::vector<TokenGrid<Scalar>> grids;
  for (const auto& triple : group_channels(raster.band_count())) {
    const auto group = select_bands(raster, std::span<const Index>(triple));
    const auto tile = resize_bilinear(group, tiler.tile_size, tiler.tile_size);
    grids.push_back(encoder.encode(tile, Provenance{0, static_cast<int>(grids.size()), 0}));
  }
  return fuse_spectral(grids, fusion);
}

/// Encodes each timestep and stacks them.
template <typename Scalar>
TokenSequence<Scalar> encode_series(std::span<const BasicRaster<Scalar>> timesteps,
                                    const TilerConfig& tiler, const FusionConfig& fusion,
                                    const TileEncoder<Scalar>& encoder) {
  if (static_cast<int>(timesteps.size()) > fusion.max_timesteps)
    throw Error(ErrorKind::TooManyTimesteps, std::to_string(timesteps.size()) +
                                                 " timesteps exceed the limit of " +
                                                 std::to_string(fusion.max_timesteps));
  std::vector<TokenSequence<Scalar>> per_step;
  per_step.reserve(timesteps.size());
  for (const auto& r : timesteps) per_step.push_back(encode_image(r, tiler, fusion, encoder));
  return stack_temporal(per_step, fusion);
}

}  // namespace earthforge
