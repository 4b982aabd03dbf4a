// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "earthforge/raster.hpp"

namespace earthforge {

/// Two source indices and the weight of the upper one for one output sample.
struct BilinearTap {
  Index lo;
  Index hi;
  double frac;
};

/// Half-pixel-centre convention: output sample i reads the source at
/// (i + 0.5) * in/out - 0.5, clamped to [0, in - 1].
inline std::vector<BilinearTap> bilinear_taps(Index in, Index out) {
  std::vector<BilinearTap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Index i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<Index>(std::floor(src));
    taps[static_cast<std::size_t>(i)] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
  }
  return taps;
}

namespace detail {
// lo + frac * (hi - lo) returns lo exactly when hi == lo.
inline double lerp(double lo, double hi, double frac) { return lo + frac * (hi - lo); }
}  // namespace detail

/// Bilinear resize of a 2-D grid. Constant grids stay bit-exact constant and
/// an unchanged size is the identity.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
resize_bilinear(const Eigen::DenseBase<Derived>& src, Index out_rows, Index out_cols) {
  using Scalar = typename Derived::Scalar;
  const auto ytaps = bilinear_taps(src.rows(), out_rows);
  const auto xtaps = bilinear_taps(src.cols(), out_cols);

  Eigen::ArrayXXd horizontal(src.rows(), out_cols);
  for (Index r = 0; r < src.rows(); ++r)
    for (Index c = 0; c < out_cols; ++c) {
      const auto& t = xtaps[static_cast<std::size_t>(c)];
      horizontal(r, c) = detail::lerp(static_cast<double>(src(r, t.lo)),
                                      static_cast<double>(src(r, t.hi)), t.frac);
    }

  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(out_rows, out_cols);
  for (Index r = 0; r < out_rows; ++r) {
    const auto& t = ytaps[static_cast<std::size_t>(r)];
    for (Index c = 0; c < out_cols; ++c)
      out(r, c) = static_cast<Scalar>(detail::lerp(horizontal(t.lo, c), horizontal(t.hi, c), t.frac));
  }
  return out;
}

/// A resized pixel is invalid when any source pixel carrying non-zero weight
/// is invalid.
inline PixelMask resize_mask(const PixelMask& mask, Index out_rows, Index out_cols) {
  if (!mask.any()) return PixelMask::Constant(out_rows, out_cols, false);
  const auto ytaps = bilinear_taps(mask.rows(), out_rows);
  const auto xtaps = bilinear_taps(mask.cols(), out_cols);
  PixelMask out(out_rows, out_cols);
  for (Index r = 0; r < out_rows; ++r) {
    const auto& ty = ytaps[static_cast<std::size_t>(r)];
    for (Index c = 0; c < out_cols; ++c) {
      const auto& tx = xtaps[static_cast<std::size_t>(c)];
      bool bad = mask(ty.lo, tx.lo);
      if (tx.frac > 0) bad = bad || mask(ty.lo, tx.hi);
      if (ty.frac > 0) bad = bad || mask(ty.hi, tx.lo);
      if (tx.frac > 0 && ty.frac > 0) bad = bad || mask(ty.hi, tx.hi);
      out(r, c) = bad;
    }
  }
  return out;
}

/// Resizes every band; invalid pixels are zeroed before and after so that
/// nodata never leaks into valid output.
template <typename Scalar>
BasicRaster<Scalar> resize_bilinear(const BasicRaster<Scalar>& raster, Index out_width,
                                    Index out_height) {
  if (out_width < 1 || out_height < 1)
    throw Error(ErrorKind::InvalidTarget, "resize target must be at least 1x1");
  const bool masked = raster.mask().any();
  PixelMask mask = resize_mask(raster.mask(), out_height, out_width);
  std::vector<typename BasicRaster<Scalar>::Band> bands;
  bands.reserve(raster.bands().size());
  for (const auto& band : raster.bands()) {
    if (masked) {
      auto resized = resize_bilinear(raster.mask().select(Scalar(0), band), out_height, out_width);
      bands.push_back(mask.select(Scalar(0), resized));
    } else {
      bands.push_back(resize_bilinear(band, out_height, out_width));
    }
  }
  return BasicRaster<Scalar>(std::move(bands), std::move(mask), raster.gsd(), raster.modality());
}

/// Copy of the rectangle [x, x+w) x [y, y+h).
template <typename Scalar>
BasicRaster<Scalar> crop_region(const BasicRaster<Scalar>& raster, Index x, Index y, Index w,
                                Index h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > raster.width() || y + h > raster.height())
    throw Error(ErrorKind::DimensionMismatch, "crop rectangle outside raster");
  std::vector<typename BasicRaster<Scalar>::Band> bands;
  bands.reserve(raster.bands().size());
  for (const auto& band : raster.bands()) bands.emplace_back(band.block(y, x, h, w));
  return BasicRaster<Scalar>(std::move(bands), raster.mask().block(y, x, h, w), raster.gsd(),
                             raster.modality());
}

}  // namespace earthforge
