#pragma once

// Synthetic shadow scenes: a bright disk on a textured gray floor with an
// elliptical cast shadow on the side away from the light.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "lgtm/image.hpp"
#include "lgtm/light_eval.hpp"

namespace lgtm {

struct FixtureStyle {
  std::size_t size = 128;
  std::uint8_t floor = 110;
  std::uint8_t subject = 205;
  std::uint8_t shadow = 45;
  int texture = 4;  // uniform +- gray-level jitter
};

inline RgbImage make_shadow_fixture(std::uint64_t seed, LightDirection light, const FixtureStyle& style = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cx_dist(0.35, 0.65);
  std::uniform_real_distribution<double> cy_dist(0.35, 0.55);
  std::uniform_real_distribution<double> r_dist(0.07, 0.12);
  std::uniform_int_distribution<int> jitter(-style.texture, style.texture);

  const double cx = cx_dist(rng);
  const double cy = cy_dist(rng);
  const double r = r_dist(rng);
  const double side = light == LightDirection::left ? 1.0 : -1.0;
  const double sx = cx + side * r;   // shadow ellipse center
  const double sy = cy + 0.55 * r;
  const double ax = 1.2 * r, ay = 0.4 * r;

  const std::size_t n = style.size;
  RgbImage image(n, n);
  for (std::size_t y = 0; y < n; ++y) {
    const double py = pixel_center(y, n);
    for (std::size_t x = 0; x < n; ++x) {
      const double px = pixel_center(x, n);
      int level = style.floor;
      const double ex = (px - sx) / ax, ey = (py - sy) / ay;
      if (ex * ex + ey * ey <= 1.0) level = style.shadow;
      if ((px - cx) * (px - cx) + (py - cy) * (py - cy) <= r * r) level = style.subject;
      level = std::clamp(level + jitter(rng), 0, 255);
      const auto v = static_cast<std::uint8_t>(level);
      image(x, y) = Rgb{v, v, v};
    }
  }
  return image;
}

/// `per_direction` left-lit then `per_direction` right-lit scenes.
inline std::vector<EvalSample> make_fixture_set(std::size_t per_direction, std::uint64_t seed = 0,
                                                const FixtureStyle& style = {}) {
  std::vector<EvalSample> out;
  out.reserve(2 * per_direction);
  std::size_t index = 0;
  for (LightDirection d : {LightDirection::left, LightDirection::right}) {
    for (std::size_t i = 0; i < per_direction; ++i, ++index) {
      char name[32];
      std::snprintf(name, sizeof name, "fixture_%04zu.png", index);
      out.push_back(EvalSample{name, make_shadow_fixture(seed * 1000003ULL + index, d, style), d});
    }
  }
  return out;
}

/// Randomly permutes the specified directions across samples (images untouched).
inline std::vector<EvalSample> shuffle_directions(std::vector<EvalSample> samples, std::uint64_t seed) {
  std::vector<LightDirection> dirs;
  dirs.reserve(samples.size());
  for (const auto& s : samples) dirs.push_back(s.specified);
  std::mt19937_64 rng(seed);
  std::shuffle(dirs.begin(), dirs.end(), rng);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].specified = dirs[i];
  return samples;
}

/// Horizontally flipped images with swapped specified directions.
inline std::vector<EvalSample> mirror_samples(std::vector<EvalSample> samples) {
  for (auto& s : samples) {
    s.image = mirror_horizontal(s.image);
    s.specified = opposite(s.specified);
  }
  return samples;
}

}  // namespace lgtm
