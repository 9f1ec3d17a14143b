#pragma once

// PNG codecs for masks (16-bit grayscale) and images (8-bit RGB), backed by
// libpng's simplified API.

#include <png.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "lgtm/error.hpp"
#include "lgtm/image.hpp"
#include "lgtm/light_mask.hpp"

namespace lgtm {

using Bytes = std::vector<std::uint8_t>;

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace detail {

inline Bytes png_encode(png_image& image, const void* pixels) {
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("PNG encode failed: " + msg);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("PNG encode failed: " + msg);
  }
  out.resize(size);
  return out;
}

inline png_image png_begin_read(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw ContractError("PNG decode failed: " + msg);
  }
  return image;
}

inline void png_finish_read(png_image& image, void* buffer) {
  if (!png_image_finish_read(&image, nullptr, buffer, 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw ContractError("PNG decode failed: " + msg);
  }
}

}  // namespace detail

/// 16-bit grayscale; stored sample = round(m * 65535).
inline Bytes encode_mask_png(const LightMask& mask) {
  std::vector<std::uint16_t> samples;
  samples.reserve(mask.width() * mask.height());
  for (double v : mask.grid()) samples.push_back(static_cast<std::uint16_t>(std::lround(v * 65535.0)));

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(mask.width());
  image.height = static_cast<png_uint_32>(mask.height());
  image.format = PNG_FORMAT_LINEAR_Y;
  return detail::png_encode(image, samples.data());
}

/// Accepts only 16-bit single-channel PNGs; values are divided by 65535.
inline LightMask decode_mask_png(std::span<const std::uint8_t> bytes) {
  png_image image = detail::png_begin_read(bytes);
  if (image.format != PNG_FORMAT_LINEAR_Y) {
    png_image_free(&image);
    throw ContractError("mask PNG must be 16-bit grayscale without alpha");
  }
  std::vector<std::uint16_t> samples(static_cast<std::size_t>(image.width) * image.height);
  detail::png_finish_read(image, samples.data());

  Grid<double> values(image.width, image.height);
  auto dst = values.values();
  for (std::size_t i = 0; i < samples.size(); ++i) dst[i] = samples[i] / 65535.0;
  return LightMask(std::move(values));
}

inline Bytes encode_rgb_png(const RgbImage& img) {
  static_assert(sizeof(Rgb) == 3);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  return detail::png_encode(image, img.values().data());
}

/// Any PNG libpng understands, converted to 8-bit RGB (alpha composited on black).
inline RgbImage decode_rgb_png(std::span<const std::uint8_t> bytes) {
  png_image image = detail::png_begin_read(bytes);
  image.format = PNG_FORMAT_RGB;
  RgbImage out(image.width, image.height);
  detail::png_finish_read(image, out.values().data());
  return out;
}

inline void write_mask_png(const std::filesystem::path& path, const LightMask& mask) {
  write_file(path, encode_mask_png(mask));
}
inline LightMask read_mask_png(const std::filesystem::path& path) { return decode_mask_png(read_file(path)); }

inline void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
  write_file(path, encode_rgb_png(image));
}
inline RgbImage read_rgb_png(const std::filesystem::path& path) { return decode_rgb_png(read_file(path)); }

}  // namespace lgtm
