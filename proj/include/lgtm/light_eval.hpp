#pragma once

// Light accuracy: locate the subject, widen its box, find the cast shadow in
// that region and check that it falls on the side opposite the light.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgtm/error.hpp"
#include "lgtm/grid.hpp"
#include "lgtm/image.hpp"
#include "lgtm/light_mask.hpp"
#include "lgtm/png_io.hpp"

namespace lgtm {

inline constexpr double kRegionExpansion = 1.25;

/// Axis-aligned box in normalized image coordinates.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 1.0;
  double y_max = 1.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double center_x() const noexcept { return 0.5 * (x_min + x_max); }
  double center_y() const noexcept { return 0.5 * (y_min + y_max); }

  void validate() const {
    if (!std::isfinite(x_min) || !std::isfinite(y_min) || !std::isfinite(x_max) || !std::isfinite(y_max)) {
      throw ArgumentError("bounding box coordinates must be finite");
    }
    if (!(x_min < x_max) || !(y_min < y_max)) throw ArgumentError("bounding box must have positive extent");
  }

  bool contains(const BoundingBox& o) const noexcept {
    return x_min <= o.x_min && y_min <= o.y_min && o.x_max <= x_max && o.y_max <= y_max;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Scales width and height by `factor` about the center, then clamps to [0, 1]^2.
inline BoundingBox expand_bbox(const BoundingBox& box, double factor) {
  box.validate();
  if (!std::isfinite(factor) || factor < 1.0) throw ArgumentError("expansion factor must be >= 1");
  const double grow_x = 0.5 * (factor - 1.0) * box.width();
  const double grow_y = 0.5 * (factor - 1.0) * box.height();
  return BoundingBox{std::max(0.0, box.x_min - grow_x), std::max(0.0, box.y_min - grow_y),
                     std::min(1.0, box.x_max + grow_x), std::min(1.0, box.y_max + grow_y)};
}

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  std::size_t width() const noexcept { return x1 - x0; }
  std::size_t height() const noexcept { return y1 - y0; }
};

/// Smallest pixel rectangle covering `box`.
inline PixelRect to_pixel_rect(const BoundingBox& box, std::size_t width, std::size_t height) {
  auto lo = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(std::floor(v * static_cast<double>(n)), 0.0, static_cast<double>(n)));
  };
  auto hi = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(std::ceil(v * static_cast<double>(n)), 0.0, static_cast<double>(n)));
  };
  PixelRect r{lo(box.x_min, width), lo(box.y_min, height), hi(box.x_max, width), hi(box.y_max, height)};
  if (r.x1 <= r.x0 || r.y1 <= r.y0) throw ArgumentError("region covers no pixels");
  return r;
}

inline BoundingBox to_box(const PixelRect& r, std::size_t width, std::size_t height) {
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  return BoundingBox{r.x0 / w, r.y0 / h, r.x1 / w, r.y1 / h};
}

enum class LightDirection { left, right };
enum class ShadowVerdict { left, right, undetermined };  // inferred light direction

inline std::string to_string(LightDirection d) { return d == LightDirection::left ? "left" : "right"; }
inline std::string to_string(ShadowVerdict v) {
  switch (v) {
    case ShadowVerdict::left: return "left";
    case ShadowVerdict::right: return "right";
    case ShadowVerdict::undetermined: return "undetermined";
  }
  return "undetermined";
}

inline LightDirection parse_light_direction(std::string_view s) {
  if (s == "left") return LightDirection::left;
  if (s == "right") return LightDirection::right;
  throw ArgumentError("light direction must be \"left\" or \"right\", got \"" + std::string(s) + "\"");
}

inline LightDirection opposite(LightDirection d) {
  return d == LightDirection::left ? LightDirection::right : LightDirection::left;
}

struct ClassifierThresholds {
  double tau = 0.02;                  // minimum |dx|, normalized image units
  double min_area_fraction = 0.001;   // of region pixels
};

/// `shadow_mask` covers exactly `region` (one cell per region pixel). A shadow
/// whose centroid lies right of the subject center implies light from the
/// left, and vice versa.
inline ShadowVerdict classify_shadow_direction(const BoundingBox& object_box, const Grid<std::uint8_t>& shadow_mask,
                                               const BoundingBox& region, ClassifierThresholds t = {}) {
  if (shadow_mask.empty()) throw ArgumentError("shadow region is empty");
  region.validate();
  object_box.validate();

  std::size_t count = 0;
  double sum_u = 0.0;
  for (std::size_t y = 0; y < shadow_mask.height(); ++y) {
    for (std::size_t x = 0; x < shadow_mask.width(); ++x) {
      if (shadow_mask(x, y)) {
        ++count;
        sum_u += pixel_center(x, shadow_mask.width());
      }
    }
  }
  if (count == 0 || static_cast<double>(count) < t.min_area_fraction * static_cast<double>(shadow_mask.size())) {
    return ShadowVerdict::undetermined;
  }
  const double shadow_x = region.x_min + (sum_u / static_cast<double>(count)) * region.width();
  const double dx = shadow_x - object_box.center_x();
  if (dx > t.tau) return ShadowVerdict::left;
  if (dx < -t.tau) return ShadowVerdict::right;
  return ShadowVerdict::undetermined;
}

// ---------------------------------------------------------------------------
// Detectors

struct ObjectDetection {
  BoundingBox box;
  Grid<std::uint8_t> mask;  // full-image subject mask; empty if the detector has none
};

class ObjectDetector {
 public:
  virtual ~ObjectDetector() = default;
  virtual std::optional<ObjectDetection> detect(const RgbImage& image) = 0;
};

class ShadowDetector {
 public:
  virtual ~ShadowDetector() = default;
  /// Returns a region-sized binary mask (1 = shadow).
  virtual Grid<std::uint8_t> detect(const RgbImage& image, const PixelRect& region,
                                    const Grid<std::uint8_t>& object_mask) = 0;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace detail

/// Largest 4-connected component at least `contrast` gray levels above the
/// image median.
class BaselineObjectDetector final : public ObjectDetector {
 public:
  explicit BaselineObjectDetector(double contrast = 20.0) : contrast_(contrast) {}

  std::optional<ObjectDetection> detect(const RgbImage& image) override {
    if (image.empty()) return std::nullopt;
    const Grid<double> lum = luminance_plane(image);
    const double threshold = detail::median({lum.begin(), lum.end()}) + contrast_;

    const std::size_t w = image.width(), h = image.height();
    Grid<std::int32_t> label(w, h, -1);
    std::vector<std::size_t> sizes;
    std::queue<std::pair<std::size_t, std::size_t>> frontier;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (label(x, y) >= 0 || lum(x, y) < threshold) continue;
        const auto id = static_cast<std::int32_t>(sizes.size());
        sizes.push_back(0);
        label(x, y) = id;
        frontier.emplace(x, y);
        while (!frontier.empty()) {
          auto [cx, cy] = frontier.front();
          frontier.pop();
          ++sizes.back();
          auto visit = [&](std::size_t nx, std::size_t ny) {
            if (label(nx, ny) < 0 && lum(nx, ny) >= threshold) {
              label(nx, ny) = id;
              frontier.emplace(nx, ny);
            }
          };
          if (cx > 0) visit(cx - 1, cy);
          if (cx + 1 < w) visit(cx + 1, cy);
          if (cy > 0) visit(cx, cy - 1);
          if (cy + 1 < h) visit(cx, cy + 1);
        }
      }
    }
    if (sizes.empty()) return std::nullopt;

    const auto best = static_cast<std::int32_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    ObjectDetection det{{}, Grid<std::uint8_t>(w, h, 0)};
    std::size_t x0 = w, y0 = h, x1 = 0, y1 = 0;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (label(x, y) != best) continue;
        det.mask(x, y) = 1;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x + 1);
        y1 = std::max(y1, y + 1);
      }
    }
    det.box = to_box(PixelRect{x0, y0, x1, y1}, w, h);
    return det;
  }

 private:
  double contrast_;
};

/// Region pixels at least `contrast` gray levels below the median of the
/// region's non-subject pixels, excluding the subject itself.
class BaselineShadowDetector final : public ShadowDetector {
 public:
  explicit BaselineShadowDetector(double contrast = 25.0) : contrast_(contrast) {}

  Grid<std::uint8_t> detect(const RgbImage& image, const PixelRect& region,
                            const Grid<std::uint8_t>& object_mask) override {
    auto is_object = [&](std::size_t x, std::size_t y) { return !object_mask.empty() && object_mask(x, y) != 0; };
    std::vector<double> background;
    background.reserve(region.width() * region.height());
    for (std::size_t y = region.y0; y < region.y1; ++y) {
      for (std::size_t x = region.x0; x < region.x1; ++x) {
        if (!is_object(x, y)) background.push_back(luminance(image(x, y)));
      }
    }
    Grid<std::uint8_t> shadow(region.width(), region.height(), 0);
    if (background.empty()) return shadow;
    const double threshold = detail::median(std::move(background)) - contrast_;
    for (std::size_t y = region.y0; y < region.y1; ++y) {
      for (std::size_t x = region.x0; x < region.x1; ++x) {
        if (!is_object(x, y) && luminance(image(x, y)) <= threshold) shadow(x - region.x0, y - region.y0) = 1;
      }
    }
    return shadow;
  }

 private:
  double contrast_;
};

// ---------------------------------------------------------------------------
// Evaluation

struct EvalSample {
  std::string id;
  RgbImage image;
  LightDirection specified = LightDirection::left;
};

enum class EvalStatus { evaluated, no_object, detector_error };

inline std::string to_string(EvalStatus s) {
  switch (s) {
    case EvalStatus::evaluated: return "evaluated";
    case EvalStatus::no_object: return "no_object";
    case EvalStatus::detector_error: return "detector_error";
  }
  return "detector_error";
}

struct ImageVerdict {
  std::string id;
  LightDirection specified = LightDirection::left;
  ShadowVerdict classified = ShadowVerdict::undetermined;
  bool correct = false;
  EvalStatus status = EvalStatus::evaluated;
  std::string error;
};

struct DirectionTally {
  std::size_t total = 0;       // images specified with this direction
  std::size_t determined = 0;  // classified left or right
  std::size_t correct = 0;

  std::optional<double> accuracy() const {
    if (determined == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(determined);
  }
};

struct LightAccuracyReport {
  std::vector<ImageVerdict> per_image;
  DirectionTally left;
  DirectionTally right;
  std::size_t no_object = 0;
  std::size_t undetermined = 0;  // subject found, shadow direction inconclusive
  std::size_t detector_errors = 0;

  std::optional<double> accuracy_left() const { return left.accuracy(); }
  std::optional<double> accuracy_right() const { return right.accuracy(); }
};

struct EvalOptions {
  double expansion = kRegionExpansion;
  ClassifierThresholds thresholds;
};

inline ImageVerdict evaluate_one(const EvalSample& sample, ObjectDetector& objects, ShadowDetector& shadows,
                                 const EvalOptions& options) {
  ImageVerdict v{sample.id, sample.specified, ShadowVerdict::undetermined, false, EvalStatus::evaluated, {}};
  try {
    const auto detection = objects.detect(sample.image);
    if (!detection) {
      v.status = EvalStatus::no_object;
      return v;
    }
    const std::size_t w = sample.image.width(), h = sample.image.height();
    const PixelRect rect = to_pixel_rect(expand_bbox(detection->box, options.expansion), w, h);
    const Grid<std::uint8_t> shadow = shadows.detect(sample.image, rect, detection->mask);
    if (shadow.width() != rect.width() || shadow.height() != rect.height()) {
      throw ContractError("shadow detector returned a mask that does not match the region");
    }
    v.classified = classify_shadow_direction(detection->box, shadow, to_box(rect, w, h), options.thresholds);
  } catch (const std::exception& e) {
    v.status = EvalStatus::detector_error;
    v.classified = ShadowVerdict::undetermined;
    v.error = e.what();
    return v;
  }
  v.correct = (v.classified == ShadowVerdict::left && v.specified == LightDirection::left) ||
              (v.classified == ShadowVerdict::right && v.specified == LightDirection::right);
  return v;
}

/// Accuracies are over images whose shadow direction was determined; images
/// without a detected subject, inconclusive shadows and detector failures are
/// counted separately and never abort the run.
inline LightAccuracyReport evaluate_light_accuracy(std::span<const EvalSample> samples, ObjectDetector& objects,
                                                   ShadowDetector& shadows, const EvalOptions& options = {}) {
  LightAccuracyReport report;
  report.per_image.reserve(samples.size());
  for (const auto& sample : samples) {
    ImageVerdict v = evaluate_one(sample, objects, shadows, options);
    DirectionTally& tally = v.specified == LightDirection::left ? report.left : report.right;
    ++tally.total;
    switch (v.status) {
      case EvalStatus::no_object: ++report.no_object; break;
      case EvalStatus::detector_error: ++report.detector_errors; break;
      case EvalStatus::evaluated:
        if (v.classified == ShadowVerdict::undetermined) {
          ++report.undetermined;
        } else {
          ++tally.determined;
          if (v.correct) ++tally.correct;
        }
        break;
    }
    report.per_image.push_back(std::move(v));
  }
  return report;
}

inline LightAccuracyReport evaluate_light_accuracy(std::span<const EvalSample> samples,
                                                   const EvalOptions& options = {}) {
  BaselineObjectDetector objects;
  BaselineShadowDetector shadows;
  return evaluate_light_accuracy(samples, objects, shadows, options);
}

inline nlohmann::json to_json(const LightAccuracyReport& r) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& v : r.per_image) {
    nlohmann::json j = {
        {"id", v.id},
        {"specified_direction", to_string(v.specified)},
        {"classified_direction", to_string(v.classified)},
        {"correct", v.correct},
        {"status", to_string(v.status)},
    };
    if (!v.error.empty()) j["error"] = v.error;
    images.push_back(std::move(j));
  }
  auto optional_number = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  auto tally = [](const DirectionTally& t) {
    return nlohmann::json{{"total", t.total}, {"determined", t.determined}, {"correct", t.correct}};
  };
  return {
      {"per_image", std::move(images)},
      {"accuracy_left", optional_number(r.accuracy_left())},
      {"accuracy_right", optional_number(r.accuracy_right())},
      {"left", tally(r.left)},
      {"right", tally(r.right)},
      {"excluded", {{"no_object", r.no_object}, {"undetermined", r.undetermined}, {"detector_errors", r.detector_errors}}},
  };
}

/// Plain-text table with Left/Right accuracy columns, one row per method.
inline std::string accuracy_table(const std::vector<std::pair<std::string, LightAccuracyReport>>& rows) {
  auto cell = [](std::optional<double> v) {
    if (!v) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << (*v * 100.0) << '%';
    return s.str();
  };
  std::size_t name_width = 6;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "Method" << " | " << std::setw(8) << "Left ^"
      << " | " << "Right ^" << '\n';
  out << std::string(name_width, '-') << "-+-" << std::string(8, '-') << "-+-" << std::string(8, '-') << '\n';
  for (const auto& [name, report] : rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << name << " | " << std::setw(8)
        << cell(report.accuracy_left()) << " | " << cell(report.accuracy_right()) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Dataset directories: <dir>/manifest.json = [{"file": ..., "direction": ...}]

inline std::vector<EvalSample> load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const Bytes raw = read_file(manifest_path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::exception& e) {
    throw ContractError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!manifest.is_array()) throw ContractError("manifest must be a JSON array");

  std::vector<EvalSample> samples;
  samples.reserve(manifest.size());
  for (const auto& entry : manifest) {
    if (!entry.is_object() || !entry.contains("file") || !entry.contains("direction") ||
        !entry.at("file").is_string() || !entry.at("direction").is_string()) {
      throw ContractError("manifest entries need string 'file' and 'direction'");
    }
    const std::string file = entry.at("file").get<std::string>();
    samples.push_back(
        EvalSample{file, read_rgb_png(dir / file), parse_light_direction(entry.at("direction").get<std::string>())});
  }
  return samples;
}

inline void write_dataset(const std::filesystem::path& dir, std::span<const EvalSample> samples) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& s : samples) {
    write_rgb_png(dir / s.id, s.image);
    manifest.push_back({{"file", s.id}, {"direction", to_string(s.specified)}});
  }
  const std::string text = manifest.dump(2) + "\n";
  write_file(dir / "manifest.json", std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace lgtm
