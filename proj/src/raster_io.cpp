// SPDX-License-Identifier: Apache-2.0
#include "earthforge/raster_io.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace earthforge {
namespace {

constexpr std::array<char, 4> kMagic = {'B', 'G', 'R', 'D'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

float read_f32(const unsigned char* p) { return std::bit_cast<float>(read_u32(p)); }

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<unsigned char>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Raster load_bgrid(const std::filesystem::path& path, const RasterLoadOptions& options) {
  const auto bytes = read_file(path);
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic.data(), 4) != 0)
    throw Error(ErrorKind::ParseError, path.string() + ": not a bgrid file");
  const std::uint64_t width = read_u32(bytes.data() + 4);
  const std::uint64_t height = read_u32(bytes.data() + 8);
  const std::uint64_t band_count = read_u32(bytes.data() + 12);
  const float gsd = read_f32(bytes.data() + 16);
  const std::uint64_t pixels = width * height;
  const std::uint64_t expected = kHeaderBytes + band_count * pixels * 4 + (pixels + 7) / 8;
  if (width == 0 || height == 0 || band_count == 0 || bytes.size() != expected)
    throw Error(ErrorKind::ParseError, path.string() + ": header does not match payload size");

  const auto rows = static_cast<Index>(height);
  const auto cols = static_cast<Index>(width);
  std::vector<Raster::Band> bands;
  bands.reserve(band_count);
  const unsigned char* cursor = bytes.data() + kHeaderBytes;
  for (std::uint64_t b = 0; b < band_count; ++b) {
    Raster::Band band(rows, cols);
    for (Index i = 0; i < rows * cols; ++i, cursor += 4) band.data()[i] = read_f32(cursor);
    bands.push_back(std::move(band));
  }
  PixelMask mask(rows, cols);
  for (Index i = 0; i < rows * cols; ++i) mask.data()[i] = ((cursor[i / 8] >> (i % 8)) & 1) != 0;
  return Raster(std::move(bands), std::move(mask), gsd, options.modality);
}

void save_bgrid(const Raster& raster, const std::filesystem::path& path) {
  const Index pixels = raster.pixel_count();
  std::vector<unsigned char> out(kMagic.begin(), kMagic.end());
  out.reserve(kHeaderBytes + raster.band_count() * pixels * 4 + (pixels + 7) / 8);
  put_u32(out, static_cast<std::uint32_t>(raster.width()));
  put_u32(out, static_cast<std::uint32_t>(raster.height()));
  put_u32(out, static_cast<std::uint32_t>(raster.band_count()));
  put_f32(out, static_cast<float>(raster.gsd()));
  for (const auto& band : raster.bands())
    for (Index i = 0; i < pixels; ++i) put_f32(out, band.data()[i]);
  std::vector<unsigned char> bits(static_cast<std::size_t>((pixels + 7) / 8), 0);
  for (Index i = 0; i < pixels; ++i)
    if (raster.mask().data()[i]) bits[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
  out.insert(out.end(), bits.begin(), bits.end());

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

Raster load_png(const std::filesystem::path& path, const RasterLoadOptions& options) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw Error(ErrorKind::IoError, path.string() + ": " + image.message);

  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  if (!color && alpha) {
    png_image_free(&image);
    throw Error(ErrorKind::IoError, path.string() + ": grey+alpha PNG is not supported");
  }
  image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB) : PNG_FORMAT_GRAY;
  const int channels = color ? (alpha ? 4 : 3) : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr))
    throw Error(ErrorKind::IoError, path.string() + ": " + image.message);

  const auto rows = static_cast<Index>(image.height);
  const auto cols = static_cast<Index>(image.width);
  std::vector<Raster::Band> bands(static_cast<std::size_t>(channels), Raster::Band(rows, cols));
  for (Index i = 0; i < rows * cols; ++i)
    for (int c = 0; c < channels; ++c)
      bands[c].data()[i] = static_cast<float>(buffer[i * channels + c]) / 255.0f;
  return Raster(std::move(bands), options.gsd, options.modality);
}

void save_png(const Raster& raster, const std::filesystem::path& path) {
  const Index channels = raster.band_count();
  if (channels != 1 && channels != 3 && channels != 4)
    throw Error(ErrorKind::InvalidArgument, "PNG output needs 1, 3 or 4 bands");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width());
  image.height = static_cast<png_uint_32>(raster.height());
  image.format = channels == 1 ? PNG_FORMAT_GRAY : channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  for (Index i = 0; i < raster.pixel_count(); ++i)
    for (Index c = 0; c < channels; ++c) {
      const float v = raster.mask().data()[i] ? 0.0f : raster.band(c).data()[i];
      buffer[i * channels + c] = static_cast<png_byte>(std::lround(v * 255.0f));
    }
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr))
    throw Error(ErrorKind::IoError, path.string() + ": " + image.message);
}

Raster load_raster(const std::filesystem::path& path, const RasterLoadOptions& options) {
  const auto ext = path.extension().string();
  if (ext == ".bgrid") return load_bgrid(path, options);
  if (ext == ".png" || ext == ".PNG") return load_png(path, options);
  throw Error(ErrorKind::IoError, path.string() + ": unsupported raster format '" + ext + "'");
}

}  // namespace earthforge
