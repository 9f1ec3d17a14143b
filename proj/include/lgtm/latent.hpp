#pragma once

// Initial latent noise and the two channel transforms applied to it:
// uniform scaling of one channel (sensitivity analysis) and mask
// modulation of the brightness channel (light guidance).
//
// Channels are addressed with 1-based indices {1, 2, 3, 4}; channel c is
// stored at index c - 1, so "channel 1" is the first plane of the latent.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lgtm/error.hpp"
#include "lgtm/light_mask.hpp"

namespace lgtm {

inline constexpr std::size_t kLatentChannels = 4;
inline constexpr int kBrightnessChannel = 1;
inline constexpr std::int64_t kDefaultTimestep = 1000;

struct LatentDims {
  std::size_t height = 0;
  std::size_t width = 0;

  friend bool operator==(const LatentDims&, const LatentDims&) = default;
};

inline std::size_t storage_index(int channel) {
  if (channel < 1 || channel > static_cast<int>(kLatentChannels)) {
    throw ArgumentError("latent channel must be in {1, 2, 3, 4}, got " + std::to_string(channel));
  }
  return static_cast<std::size_t>(channel - 1);
}

/// 4-channel latent, channel-major then row-major, with seed/timestep provenance.
class LatentNoise {
 public:
  LatentNoise() = default;

  LatentNoise(LatentDims dims, std::vector<double> values, std::uint64_t seed = 0,
              std::int64_t timestep = kDefaultTimestep)
      : dims_(dims), values_(std::move(values)), seed_(seed), timestep_(timestep) {
    if (dims_.height == 0 || dims_.width == 0) throw ArgumentError("latent dimensions must be positive");
    if (values_.size() != kLatentChannels * plane_size()) {
      throw ContractError("latent payload does not match 4 x height x width");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw ContractError("latent values must be finite");
    }
  }

  static LatentNoise zeros(LatentDims dims, std::uint64_t seed = 0) {
    return LatentNoise(dims, std::vector<double>(kLatentChannels * dims.height * dims.width, 0.0), seed);
  }

  LatentDims dims() const noexcept { return dims_; }
  std::size_t height() const noexcept { return dims_.height; }
  std::size_t width() const noexcept { return dims_.width; }
  std::size_t plane_size() const noexcept { return dims_.height * dims_.width; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::int64_t timestep() const noexcept { return timestep_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  std::span<const double> channel(int c) const { return values().subspan(storage_index(c) * plane_size(), plane_size()); }
  std::span<double> channel(int c) { return values().subspan(storage_index(c) * plane_size(), plane_size()); }

  double at(int c, std::size_t x, std::size_t y) const { return channel(c)[y * width() + x]; }

  Grid<double> channel_grid(int c) const {
    auto ch = channel(c);
    return Grid<double>(width(), height(), std::vector<double>(ch.begin(), ch.end()));
  }

  friend bool operator==(const LatentNoise&, const LatentNoise&) = default;

 private:
  LatentDims dims_;
  std::vector<double> values_;
  std::uint64_t seed_ = 0;
  std::int64_t timestep_ = kDefaultTimestep;
};

/// i.i.d. N(0, 1) samples from a 64-bit Mersenne Twister seeded with `seed`.
/// Samples are rounded to float so that they survive the f32 file format
/// unchanged.
inline LatentNoise sample_initial_noise(std::uint64_t seed, LatentDims dims,
                                        std::int64_t timestep = kDefaultTimestep) {
  if (dims.height == 0 || dims.width == 0) throw ArgumentError("latent dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(kLatentChannels * dims.height * dims.width);
  for (double& v : values) v = static_cast<float>(normal(rng));
  return LatentNoise(dims, std::move(values), seed, timestep);
}

struct ChannelPerturbation {
  int channel = kBrightnessChannel;
  double alpha = 1.0;
};

/// Multiplies one channel by a constant; all other channels are copied verbatim.
inline LatentNoise scale_channel(const LatentNoise& z, ChannelPerturbation p) {
  storage_index(p.channel);
  if (!std::isfinite(p.alpha)) throw ArgumentError("scaling factor must be finite");
  LatentNoise out = z;
  for (double& v : out.channel(p.channel)) v *= p.alpha;
  return out;
}

struct GuidanceOptions {
  /// Rescale the masked cells of channel 1 to unit standard deviation after
  /// modulation. Off by default: the plain transform inflates variance by up
  /// to 2x where the mask is 1.
  bool normalize = false;
};

/// Channel 1 becomes z1 * (1 + m); channels 2-4 are copied verbatim.
/// The mask must already be at latent resolution.
inline LatentNoise apply_light_guidance(const LatentNoise& z, const LightMask& mask, GuidanceOptions options = {}) {
  if (mask.width() != z.width() || mask.height() != z.height()) {
    throw ContractError("mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                        " but latent is " + std::to_string(z.width()) + "x" + std::to_string(z.height()));
  }
  LatentNoise out = z;
  auto ch = out.channel(kBrightnessChannel);
  auto m = mask.grid().values();
  for (std::size_t i = 0; i < ch.size(); ++i) ch[i] *= 1.0 + m[i];

  if (options.normalize) {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (m[i] > 0.0) {
        sum += ch[i];
        sum_sq += ch[i] * ch[i];
        ++n;
      }
    }
    if (n > 1) {
      const double mean = sum / static_cast<double>(n);
      const double var = (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
      if (var > 0.0) {
        const double inv_std = 1.0 / std::sqrt(var);
        for (std::size_t i = 0; i < ch.size(); ++i) {
          if (m[i] > 0.0) ch[i] *= inv_std;
        }
      }
    }
  }
  return out;
}

}  // namespace lgtm
