// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "earthforge/error.hpp"
#include "earthforge/tags.hpp"

namespace earthforge {

using Eigen::Index;

template <typename Scalar>
using BandGrid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// true marks an invalid (nodata) pixel.
using PixelMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Multi-band image normalised to [0,1]. Grids are stored height x width
/// (row = y). Immutable once constructed; the constructor enforces shape,
/// finiteness and range on every valid pixel.
template <typename Scalar>
class BasicRaster {
 public:
  using Band = BandGrid<Scalar>;

  BasicRaster(std::vector<Band> bands, PixelMask mask, double gsd, Modality modality)
      : bands_(std::move(bands)), mask_(std::move(mask)), gsd_(gsd), modality_(modality) {
    validate();
  }

  BasicRaster(std::vector<Band> bands, double gsd, Modality modality)
      : BasicRaster(bands, all_valid(bands), gsd, modality) {}

  static BasicRaster constant(Index width, Index height, Index band_count, Scalar value,
                              double gsd = 1.0, Modality modality = Modality::HrRgb05) {
    std::vector<Band> bands(static_cast<std::size_t>(band_count > 0 ? band_count : 0),
                            Band::Constant(height, width, value));
    return BasicRaster(std::move(bands), PixelMask::Constant(height, width, false), gsd,
                       modality);
  }

  Index width() const noexcept { return mask_.cols(); }
  Index height() const noexcept { return mask_.rows(); }
  Index band_count() const noexcept { return static_cast<Index>(bands_.size()); }
  double gsd() const noexcept { return gsd_; }
  Modality modality() const noexcept { return modality_; }

  const Band& band(Index i) const {
    if (i < 0 || i >= band_count())
      throw Error(ErrorKind::IndexOutOfRange, "band index " + std::to_string(i) +
                                                  " out of range for " +
                                                  std::to_string(band_count()) + " bands");
    return bands_[static_cast<std::size_t>(i)];
  }
  std::span<const Band> bands() const noexcept { return bands_; }
  const PixelMask& mask() const noexcept { return mask_; }

  Index pixel_count() const noexcept { return width() * height(); }
  Index valid_count() const noexcept { return pixel_count() - mask_.count(); }

 private:
  static PixelMask all_valid(const std::vector<Band>& bands) {
    if (bands.empty()) return PixelMask(0, 0);
    return PixelMask::Constant(bands.front().rows(), bands.front().cols(), false);
  }

  void validate() const {
    if (bands_.empty())
      throw Error(ErrorKind::InvalidArgument, "raster needs at least one band");
    if (mask_.rows() < 1 || mask_.cols() < 1)
      throw Error(ErrorKind::InvalidArgument, "raster dimensions must be >= 1");
    if (!(gsd_ > 0.0))
      throw Error(ErrorKind::InvalidArgument, "ground-sample distance must be positive");
    for (std::size_t b = 0; b < bands_.size(); ++b) {
      const Band& band = bands_[b];
      if (band.rows() != mask_.rows() || band.cols() != mask_.cols())
        throw Error(ErrorKind::DimensionMismatch,
                    "band " + std::to_string(b) + " shape differs from mask");
      // NaN fails both comparisons, so it is only tolerated under the mask.
      if (!((band >= Scalar(0) && band <= Scalar(1)) || mask_).all())
        throw Error(ErrorKind::InvalidArgument,
                    "band " + std::to_string(b) + " has a valid pixel outside [0,1]");
    }
  }

  std::vector<Band> bands_;
  PixelMask mask_;
  double gsd_;
  Modality modality_;
};

using Raster = BasicRaster<float>;

/// Fraction of pixels whose mask entry is false.
template <typename Scalar>
double valid_coverage(const BasicRaster<Scalar>& raster) {
  return static_cast<double>(raster.valid_count()) / static_cast<double>(raster.pixel_count());
}

template <typename Scalar>
double masked_fraction(const BasicRaster<Scalar>& raster) {
  return static_cast<double>(raster.mask().count()) / static_cast<double>(raster.pixel_count());
}

/// Mean over valid pixels of the per-pixel mean of the first min(3, bands)
/// bands.
template <typename Scalar>
double mean_luminance(const BasicRaster<Scalar>& raster) {
  const Index valid = raster.valid_count();
  if (valid == 0) throw Error(ErrorKind::AllPixelsInvalid, "every pixel is masked");
  const Index used = std::min<Index>(3, raster.band_count());
  double total = 0.0;
  for (Index b = 0; b < used; ++b) {
    // select() keeps masked NaNs out of the sum.
    total += raster.mask().select(0.0, raster.band(b).template cast<double>()).sum();
  }
  return total / (static_cast<double>(used) * static_cast<double>(valid));
}

/// New raster with the listed bands in order (repeats allowed).
template <typename Scalar>
BasicRaster<Scalar> select_bands(const BasicRaster<Scalar>& raster, std::span<const Index> indices) {
  if (indices.empty()) throw Error(ErrorKind::InvalidArgument, "band selection is empty");
  std::vector<typename BasicRaster<Scalar>::Band> out;
  out.reserve(indices.size());
  for (Index i : indices) out.push_back(raster.band(i));
  return BasicRaster<Scalar>(std::move(out), raster.mask(), raster.gsd(), raster.modality());
}

template <typename Scalar>
BasicRaster<Scalar> select_bands(const BasicRaster<Scalar>& raster,
                                 std::initializer_list<Index> indices) {
  return select_bands(raster, std::span<const Index>(indices.begin(), indices.size()));
}

}  // namespace earthforge
