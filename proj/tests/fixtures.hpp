// SPDX-License-Identifier: Apache-2.0
// Synthetic corpora and scratch directories shared by the unit tests and the
// acceptance runner.
#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "earthforge/instruct.hpp"
#include "earthforge/raster.hpp"
#include "earthforge/raster_io.hpp"

namespace fixtures {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ef") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// 8x8, 3 bands, every valid pixel equal to `luminance`, the first
/// `masked` pixels (row-major) invalid.
inline earthforge::Raster planted_raster(float luminance, int masked) {
  using earthforge::Raster;
  earthforge::PixelMask mask = earthforge::PixelMask::Constant(8, 8, false);
  for (int i = 0; i < masked; ++i) mask(i / 8, i % 8) = true;
  std::vector<Raster::Band> bands(3, Raster::Band::Constant(8, 8, luminance));
  return Raster(std::move(bands), std::move(mask), 0.5, earthforge::Modality::HrRgb05);
}

/// Image whose statistics are fixed by construction, not measured.
struct PlantedImage {
  std::string file;
  float luminance;
  int masked;  // of 64 pixels
  double coverage() const { return (64.0 - masked) / 64.0; }
};

/// Luminances and coverages chosen to be exact in binary so the oracle and
/// the filter agree without tolerance; 0.5 coverage sits on the boundary.
inline std::vector<PlantedImage> planted_images() {
  std::vector<PlantedImage> out;
  const std::array<float, 4> lums = {0.25f, 0.5f, 0.75f, 0.875f};
  const std::array<int, 5> masked = {0, 16, 32, 48, 64};
  for (float l : lums)
    for (int m : masked)
      out.push_back({"img_" + std::to_string(static_cast<int>(l * 1000)) + "_" + std::to_string(m) + ".bgrid", l, m});
  return out;
}

inline bool planted_passes(const PlantedImage& img, double lum_max = 0.8, double cov_min = 0.5) {
  return img.masked < 64 && img.luminance <= lum_max && img.coverage() >= cov_min;
}

inline constexpr std::array<const char*, 5> kSources = {"NAIP", "Sentinel2", "Landsat", "SkyScript",
                                                        "Sentinel1"};
inline constexpr std::array<const char*, 8> kCategories = {
    "building", "road", "tree", "parking lot", "river", "bridge", "farmland", "pond"};

struct Corpus {
  std::vector<earthforge::LabeledSample> samples;
  std::vector<bool> expected_keep;          // label + image oracle
  std::map<std::string, int> kept_by_source;
  int sparse = 0;                            // fewer than 3 labels
  int bad_image = 0;                         // enough labels, some image fails
};

/// Writes the planted images into `dir` and returns `n` samples referencing
/// them, with label counts 0..6 and one or two images each.
inline Corpus make_corpus(const fs::path& dir, std::size_t n, std::uint64_t seed,
                          bool write_images = true) {
  const auto images = planted_images();
  if (write_images)
    for (const auto& img : images) earthforge::save_bgrid(planted_raster(img.luminance, img.masked), dir / img.file);

  Corpus c;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> label_count(0, 6), pick_image(0, static_cast<int>(images.size()) - 1),
      pick_source(0, static_cast<int>(kSources.size()) - 1), pick_cat(0, static_cast<int>(kCategories.size()) - 1),
      coin(0, 3);
  for (std::size_t i = 0; i < n; ++i) {
    earthforge::LabeledSample s;
    char id[32];
    std::snprintf(id, sizeof id, "s%06zu", i);
    s.sample_id = id;
    s.source = kSources[static_cast<std::size_t>(pick_source(rng))];
    bool images_pass = true;
    const int image_count = coin(rng) == 0 ? 2 : 1;
    for (int k = 0; k < image_count; ++k) {
      const auto& img = images[static_cast<std::size_t>(pick_image(rng))];
      s.image_refs.push_back(img.file);
      images_pass = images_pass && planted_passes(img);
    }
    const int labels = label_count(rng);
    for (int k = 0; k < labels; ++k) {
      earthforge::Label l;
      l.category = kCategories[static_cast<std::size_t>(pick_cat(rng))];
      l.geometry = {earthforge::LabelGeometry::Kind::Point, {static_cast<double>(k), 1.0}};
      l.position = k % 2 ? "upper left" : "center";
      s.labels.push_back(std::move(l));
    }
    const bool keep = labels >= 3 && images_pass;
    if (labels < 3) ++c.sparse;
    else if (!images_pass) ++c.bad_image;
    if (keep) ++c.kept_by_source[s.source];
    c.expected_keep.push_back(keep);
    c.samples.push_back(std::move(s));
  }
  return c;
}

inline void write_samples(const fs::path& file, const std::vector<earthforge::LabeledSample>& samples) {
  std::string text;
  for (const auto& s : samples) text += earthforge::sample_to_json_line(s) + "\n";
  spit(file, text);
}

/// Manifest row, as (stage, dataset, printed tags), each source is filed under.
inline std::tuple<int, std::string, std::string> expected_row(const std::string& source) {
  if (source == "NAIP") return {1, "NAIP", "[hr_rgb_0.5]"};
  if (source == "Sentinel2") return {1, "Sentinel-2", "[s2_rgb_10]"};
  if (source == "Landsat") return {1, "Landsat", "[l8_rgb_30]"};
  if (source == "SkyScript") return {1, "SkyScript", "[s2_rgb_10]"};
  return {3, "Sentinel-1", "[s1_vh_10]"};
}

}  // namespace fixtures
