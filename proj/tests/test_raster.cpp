// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "earthforge/raster.hpp"
#include "earthforge/raster_io.hpp"
#include "earthforge/resample.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace earthforge;

namespace {

template <typename Scalar>
BandGrid<Scalar> random_grid(std::mt19937_64& rng, Index rows, Index cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BandGrid<Scalar> g(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) g(r, c) = static_cast<Scalar>(u(rng));
  return g;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an earthforge::Error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("raster constructor rejects bad input") {
  using Band = Raster::Band;
  CHECK(kind_of([] { Raster({}, 1.0, Modality::HrRgb05); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { Raster({Band::Constant(2, 2, 0.5f)}, 0.0, Modality::HrRgb05); }) ==
        ErrorKind::InvalidArgument);
  CHECK(kind_of([] {
          Raster({Band::Constant(2, 2, 0.5f), Band::Constant(2, 3, 0.5f)}, 1.0, Modality::HrRgb05);
        }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([] { Raster({Band::Constant(2, 2, 1.5f)}, 1.0, Modality::HrRgb05); }) ==
        ErrorKind::InvalidArgument);

  Band nan_band = Band::Constant(2, 2, 0.5f);
  nan_band(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK(kind_of([&] { Raster({nan_band}, 1.0, Modality::HrRgb05); }) == ErrorKind::InvalidArgument);
  PixelMask mask = PixelMask::Constant(2, 2, false);
  mask(0, 0) = true;
  CHECK_NOTHROW(Raster({nan_band}, mask, 1.0, Modality::HrRgb05));
}

TEST_CASE("luminance and coverage ignore masked pixels") {
  const Raster r = fixtures::planted_raster(0.75f, 16);
  CHECK(mean_luminance(r) == 0.75);
  CHECK(valid_coverage(r) == 0.75);
  CHECK(masked_fraction(r) == 0.25);
  CHECK(kind_of([] { mean_luminance(fixtures::planted_raster(0.5f, 64)); }) == ErrorKind::AllPixelsInvalid);

  // Only the first three bands count towards luminance.
  std::vector<Raster::Band> bands = {Raster::Band::Constant(1, 1, 0.0f), Raster::Band::Constant(1, 1, 0.5f),
                                     Raster::Band::Constant(1, 1, 1.0f), Raster::Band::Constant(1, 1, 1.0f)};
  CHECK(mean_luminance(Raster(bands, 1.0, Modality::S2Ms30)) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("select_bands keeps order and rejects bad indices") {
  std::vector<Raster::Band> bands;
  for (int b = 0; b < 4; ++b) bands.push_back(Raster::Band::Constant(2, 2, 0.1f * static_cast<float>(b)));
  const Raster r(bands, 10.0, Modality::S2Ms30);
  const Raster s = select_bands(r, {3, 1, 1});
  REQUIRE(s.band_count() == 3);
  CHECK(s.band(0)(0, 0) == r.band(3)(0, 0));
  CHECK(s.band(2)(0, 0) == r.band(1)(0, 0));
  CHECK(s.gsd() == 10.0);
  CHECK(kind_of([&] { select_bands(r, {4}); }) == ErrorKind::IndexOutOfRange);
  CHECK(kind_of([&] { select_bands(r, std::span<const Index>{}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("bilinear resize matches the dense interpolation oracle") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<Index> size(1, 24);
  for (int trial = 0; trial < 60; ++trial) {
    const Index in_r = size(rng), in_c = size(rng), out_r = size(rng), out_c = size(rng);
    const BandGrid<double> g = random_grid<double>(rng, in_r, in_c);
    const auto got = resize_bilinear(g, out_r, out_c);
    const Eigen::MatrixXd want = oracle::bilinear_dense(g.matrix(), out_r, out_c);
    CHECK((got.matrix() - want).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("bilinear resize is exact on constants and at identity size") {
  const BandGrid<float> c = BandGrid<float>::Constant(7, 5, 0.3f);
  const auto up = resize_bilinear(c, 19, 3);
  CHECK((up == 0.3f).all());

  std::mt19937_64 rng(3);
  const BandGrid<float> g = random_grid<float>(rng, 9, 13);
  CHECK((resize_bilinear(g, 9, 13) == g).all());
}

TEST_CASE("resized masks mark pixels that touch invalid sources") {
  Raster r = fixtures::planted_raster(0.5f, 0);
  PixelMask mask = PixelMask::Constant(8, 8, false);
  mask(0, 0) = true;
  Raster masked(std::vector<Raster::Band>(r.bands().begin(), r.bands().end()), mask, 0.5, Modality::HrRgb05);

  const Raster same = resize_bilinear(masked, 8, 8);
  CHECK(same.mask().count() == 1);
  const Raster down = resize_bilinear(masked, 4, 4);
  CHECK(down.mask()(0, 0));
  CHECK(down.mask().count() == 1);
  // Valid outputs never see the zeroed nodata.
  CHECK(((down.band(0) == 0.5f) || down.mask()).all());
  CHECK(kind_of([&] { resize_bilinear(masked, 0, 3); }) == ErrorKind::InvalidTarget);
}

TEST_CASE("crop_region copies the rectangle") {
  std::mt19937_64 rng(5);
  const Raster r({random_grid<float>(rng, 6, 10)}, 1.0, Modality::HrRgb05);
  const Raster c = crop_region(r, 2, 1, 4, 3);
  CHECK(c.width() == 4);
  CHECK(c.height() == 3);
  CHECK(c.band(0)(2, 3) == r.band(0)(3, 5));
  CHECK(kind_of([&] { crop_region(r, 8, 0, 4, 1); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("bgrid round trip preserves values, mask and gsd") {
  fixtures::TempDir dir("raster");
  std::mt19937_64 rng(9);
  PixelMask mask = PixelMask::Constant(5, 7, false);
  mask(4, 6) = true;
  mask(1, 2) = true;
  Raster::Band a = random_grid<float>(rng, 5, 7), b = random_grid<float>(rng, 5, 7);
  a(4, 6) = std::numeric_limits<float>::quiet_NaN();
  const Raster r({a, b}, mask, 30.0, Modality::L8Ms30);
  save_bgrid(r, dir / "x.bgrid");
  const Raster back = load_raster(dir / "x.bgrid", {Modality::L8Ms30, 1.0});
  CHECK(back.gsd() == 30.0);
  CHECK(back.band_count() == 2);
  CHECK((back.mask() == mask).all());
  CHECK(((back.band(0) == a) || mask).all());
  CHECK((back.band(1) == b).all());
}

TEST_CASE("png round trip quantises to 8 bits") {
  fixtures::TempDir dir("png");
  std::mt19937_64 rng(2);
  std::vector<Raster::Band> bands;
  for (int i = 0; i < 3; ++i) bands.push_back(random_grid<float>(rng, 4, 6));
  const Raster r(bands, 0.5, Modality::HrRgb05);
  save_png(r, dir / "x.png");
  const Raster back = load_raster(dir / "x.png");
  REQUIRE(back.band_count() == 3);
  for (int i = 0; i < 3; ++i) CHECK((back.band(i) - r.band(i)).abs().maxCoeff() <= 0.5f / 255.0f + 1e-6f);
  CHECK(back.valid_count() == back.pixel_count());
}

TEST_CASE("loader errors are typed") {
  fixtures::TempDir dir("bad");
  CHECK(kind_of([&] { load_raster(dir / "missing.bgrid"); }) == ErrorKind::IoError);
  fixtures::spit(dir / "junk.bgrid", "NOPE0000000000000000");
  CHECK(kind_of([&] { load_raster(dir / "junk.bgrid"); }) == ErrorKind::ParseError);
  fixtures::spit(dir / "x.tif", "");
  CHECK(kind_of([&] { load_raster(dir / "x.tif"); }) == ErrorKind::IoError);
}
