#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lgtm/error.hpp"

namespace lgtm {

/// Dense row-major 2-D field. `(x, y)` addresses column x of row y.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), values_(width * height, fill) {}
  Grid(std::size_t width, std::size_t height, std::vector<T> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != width_ * height_) {
      throw ContractError("grid payload does not match its dimensions");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& operator()(std::size_t x, std::size_t y) { return values_[y * width_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> values_;
};

template <typename T>
Grid<T> mirror_horizontal(const Grid<T>& in) {
  Grid<T> out(in.width(), in.height());
  for (std::size_t y = 0; y < in.height(); ++y) {
    for (std::size_t x = 0; x < in.width(); ++x) {
      out(in.width() - 1 - x, y) = in(x, y);
    }
  }
  return out;
}

namespace detail {

// Source coordinate of a destination sample under pixel-center alignment,
// clamped to the valid source range.
inline void bilinear_taps(std::size_t dst_index, std::size_t dst_size, std::size_t src_size,
                          std::size_t& i0, std::size_t& i1, double& frac) {
  double s = (static_cast<double>(dst_index) + 0.5) * static_cast<double>(src_size) /
                 static_cast<double>(dst_size) -
             0.5;
  s = std::clamp(s, 0.0, static_cast<double>(src_size - 1));
  i0 = static_cast<std::size_t>(std::floor(s));
  i1 = std::min(i0 + 1, src_size - 1);
  frac = s - static_cast<double>(i0);
}

}  // namespace detail

/// Bilinear resampling with pixel centers aligned at (i + 0.5) / n and edge clamping.
/// Left-right reflection commutes with this operator.
template <typename T>
Grid<T> resample_bilinear(const Grid<T>& src, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw ArgumentError("resample target dimensions must be positive");
  if (src.empty()) throw ArgumentError("cannot resample an empty grid");

  struct Tap {
    std::size_t i0, i1;
    double frac;
  };
  std::vector<Tap> xs(width), ys(height);
  for (std::size_t x = 0; x < width; ++x) detail::bilinear_taps(x, width, src.width(), xs[x].i0, xs[x].i1, xs[x].frac);
  for (std::size_t y = 0; y < height; ++y) detail::bilinear_taps(y, height, src.height(), ys[y].i0, ys[y].i1, ys[y].frac);

  Grid<T> out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const auto& ty = ys[y];
    for (std::size_t x = 0; x < width; ++x) {
      const auto& tx = xs[x];
      const double top = (1.0 - tx.frac) * src(tx.i0, ty.i0) + tx.frac * src(tx.i1, ty.i0);
      const double bottom = (1.0 - tx.frac) * src(tx.i0, ty.i1) + tx.frac * src(tx.i1, ty.i1);
      out(x, y) = static_cast<T>((1.0 - ty.frac) * top + ty.frac * bottom);
    }
  }
  return out;
}

}  // namespace lgtm
