#pragma once

// Channel-wise sensitivity sweep: scale one latent channel of fixed seeded
// noise by each alpha, decode, and quantify how brightness, the brightness
// centroid and chroma respond.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgtm/backend.hpp"
#include "lgtm/image.hpp"
#include "lgtm/latent.hpp"

namespace lgtm {

struct LuminanceStats {
  double mean_luminance = 0.0;
  Point2 centroid{0.5, 0.5};
};

/// Mean Rec.601 luminance and the luminance-weighted mean pixel position in
/// normalized coordinates. An all-black image has centroid (0.5, 0.5).
inline LuminanceStats luminance_stats(const RgbImage& image) {
  if (image.empty()) throw ArgumentError("cannot compute statistics of an empty image");
  double total = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t y = 0; y < image.height(); ++y) {
    const double cy = pixel_center(y, image.height());
    for (std::size_t x = 0; x < image.width(); ++x) {
      const double l = luminance(image(x, y));
      total += l;
      sx += l * pixel_center(x, image.width());
      sy += l * cy;
    }
  }
  LuminanceStats stats;
  stats.mean_luminance = total / static_cast<double>(image.size());
  if (total > 0.0) stats.centroid = Point2{sx / total, sy / total};
  return stats;
}

/// Mean Euclidean distance in the Rec.601 (Cb, Cr) plane between two images
/// of equal size.
inline double mean_chroma_shift(const RgbImage& a, const RgbImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw ContractError("chroma comparison needs equal sizes");
  auto cb = [](Rgb p) { return -0.168736 * p.r - 0.331264 * p.g + 0.5 * p.b; };
  auto cr = [](Rgb p) { return 0.5 * p.r - 0.418688 * p.g - 0.081312 * p.b; };
  double sum = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) sum += std::hypot(cb(av[i]) - cb(bv[i]), cr(av[i]) - cr(bv[i]));
  return av.empty() ? 0.0 : sum / static_cast<double>(av.size());
}

inline const std::vector<double> kDefaultSweepAlphas = {0.25, 0.5, 1.0, 2.0, 4.0};

struct SweepConfig {
  std::string prompt;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<int> channels = {1, 2, 3, 4};
  std::vector<double> alphas = kDefaultSweepAlphas;
  ImageSize output_size;

  void validate() const {
    if (seeds.empty()) throw ArgumentError("sweep needs at least one seed");
    if (channels.empty()) throw ArgumentError("sweep needs at least one channel");
    for (int c : channels) storage_index(c);
    if (alphas.empty()) throw ArgumentError("sweep needs at least one alpha");
    for (double a : alphas) {
      if (!std::isfinite(a)) throw ArgumentError("sweep alphas must be finite");
    }
    if (std::find(alphas.begin(), alphas.end(), 1.0) == alphas.end()) {
      throw ArgumentError("sweep alphas must include the reference value 1.0");
    }
    latent_dims(output_size);
  }
};

struct SweepEntry {
  std::uint64_t seed = 0;
  int channel = 1;
  double alpha = 1.0;
  double mean_luminance = 0.0;
  Point2 luminance_centroid;
  double mean_chroma_shift = 0.0;  // vs. the alpha = 1 image of the same seed
};

struct SweepReport {
  SweepConfig config;
  std::vector<SweepEntry> entries;
};

/// One noise sample per seed, reused for every (channel, alpha). The report is
/// assembled only when every entry succeeded.
inline SweepReport run_sweep(const SweepConfig& config, Backend& backend) {
  config.validate();
  SweepReport report{config, {}};
  report.entries.reserve(config.seeds.size() * config.channels.size() * config.alphas.size());

  for (std::uint64_t seed : config.seeds) {
    GenerationRequest request;
    request.prompt = config.prompt;
    request.seed = seed;
    request.output_size = config.output_size;

    const LatentNoise noise = sample_initial_noise(seed, backend.latent_dims(config.output_size));
    const GeneratedImage reference = backend.denoise(request, noise);

    for (int channel : config.channels) {
      for (double alpha : config.alphas) {
        const GeneratedImage image = backend.denoise(request, scale_channel(noise, {channel, alpha}));
        const LuminanceStats stats = luminance_stats(image.pixels);
        report.entries.push_back(SweepEntry{seed, channel, alpha, stats.mean_luminance, stats.centroid,
                                            mean_chroma_shift(image.pixels, reference.pixels)});
      }
    }
  }
  return report;
}

inline nlohmann::json to_json(const SweepReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    entries.push_back({
        {"seed", e.seed},
        {"channel", e.channel},
        {"alpha", e.alpha},
        {"mean_luminance", e.mean_luminance},
        {"luminance_centroid", {{"x", e.luminance_centroid.x}, {"y", e.luminance_centroid.y}}},
        {"mean_chroma_shift", e.mean_chroma_shift},
    });
  }
  return {
      {"prompt", report.config.prompt},
      {"seeds", report.config.seeds},
      {"channels", report.config.channels},
      {"alphas", report.config.alphas},
      {"width", report.config.output_size.width},
      {"height", report.config.output_size.height},
      {"entries", std::move(entries)},
  };
}

inline std::string to_csv(const SweepReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "seed,channel,alpha,mean_luminance,centroid_x,centroid_y,mean_chroma_shift\n";
  for (const auto& e : report.entries) {
    out << e.seed << ',' << e.channel << ',' << e.alpha << ',' << e.mean_luminance << ',' << e.luminance_centroid.x
        << ',' << e.luminance_centroid.y << ',' << e.mean_chroma_shift << '\n';
  }
  return out.str();
}

}  // namespace lgtm
