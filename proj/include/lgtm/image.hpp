#pragma once

#include <cstdint>

#include "lgtm/grid.hpp"

namespace lgtm {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Grid<Rgb>;

/// Rec.601 luma of an 8-bit pixel. Evaluated as an exact integer sum so that
/// pixels with equal luma compare bit-identical.
inline double luminance(Rgb p) { return (299 * p.r + 587 * p.g + 114 * p.b) / 1000.0; }

inline Grid<double> luminance_plane(const RgbImage& image) {
  Grid<double> out(image.width(), image.height());
  auto src = image.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = luminance(src[i]);
  return out;
}

}  // namespace lgtm
