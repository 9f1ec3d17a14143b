#pragma once

// Light-direction masks from a point or segment light source.
//
// Coordinates live in the unit square: x grows to the right, y grows
// downward, pixel (col j, row i) of a W x H raster has its center at
// ((j + 0.5) / W, (i + 0.5) / H). Distances are Euclidean in these
// coordinates divided by sqrt(2), so a distance of 1 spans the frame
// diagonal and the same LightSpec renders consistently at any resolution.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "lgtm/error.hpp"
#include "lgtm/grid.hpp"

namespace lgtm {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

enum class SourceKind { point, segment };

inline constexpr double kMinAnchorCoord = -0.5;
inline constexpr double kMaxAnchorCoord = 1.5;
inline constexpr double kMaxRadius = 4.0;

/// User light condition: a point or a segment lamp plus the falloff radius,
/// expressed as a fraction of the frame diagonal.
struct LightSpec {
  SourceKind kind = SourceKind::point;
  Point2 anchor_a;
  std::optional<Point2> anchor_b;  // present iff kind == segment
  double radius = 0.5;

  static LightSpec point(Point2 a, double radius) { return {SourceKind::point, a, std::nullopt, radius}; }
  static LightSpec segment(Point2 a, Point2 b, double radius) { return {SourceKind::segment, a, b, radius}; }

  /// Throws ArgumentError if an invariant is violated.
  void validate() const {
    auto finite = [](Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); };
    if (!finite(anchor_a)) throw ArgumentError("light anchor coordinates must be finite");
    if (kind == SourceKind::segment && !anchor_b) throw ArgumentError("segment light requires a second anchor");
    if (kind == SourceKind::point && anchor_b) throw ArgumentError("point light must not carry a second anchor");
    if (anchor_b && !finite(*anchor_b)) throw ArgumentError("light anchor coordinates must be finite");
    if (!std::isfinite(radius) || radius <= 0.0 || radius > kMaxRadius) {
      throw ArgumentError("light radius must satisfy 0 < radius <= 4");
    }
  }

  /// Anchors clamped to the permitted off-frame band [-0.5, 1.5]^2.
  LightSpec clamped() const {
    auto clamp = [](Point2 p) {
      return Point2{std::clamp(p.x, kMinAnchorCoord, kMaxAnchorCoord),
                    std::clamp(p.y, kMinAnchorCoord, kMaxAnchorCoord)};
    };
    LightSpec out = *this;
    out.anchor_a = clamp(anchor_a);
    if (anchor_b) out.anchor_b = clamp(*anchor_b);
    return out;
  }

  /// Reflection across the vertical midline x = 0.5.
  LightSpec mirrored() const {
    LightSpec out = *this;
    out.anchor_a.x = 1.0 - anchor_a.x;
    if (anchor_b) out.anchor_b->x = 1.0 - anchor_b->x;
    return out;
  }

  friend bool operator==(const LightSpec&, const LightSpec&) = default;
};

/// Scalar mask with every value in [0, 1].
class LightMask {
 public:
  LightMask() = default;

  explicit LightMask(Grid<double> values) : values_(std::move(values)) {
    if (values_.width() == 0 || values_.height() == 0) throw ArgumentError("mask dimensions must be positive");
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw ContractError("mask values must lie in [0, 1]");
    }
  }

  static LightMask constant(std::size_t width, std::size_t height, double value) {
    return LightMask(Grid<double>(width, height, value));
  }

  std::size_t width() const noexcept { return values_.width(); }
  std::size_t height() const noexcept { return values_.height(); }
  double operator()(std::size_t x, std::size_t y) const { return values_(x, y); }
  const Grid<double>& grid() const noexcept { return values_; }

  friend bool operator==(const LightMask&, const LightMask&) = default;

 private:
  Grid<double> values_;
};

inline double pixel_center(std::size_t index, std::size_t extent) {
  return (static_cast<double>(index) + 0.5) / static_cast<double>(extent);
}

/// Euclidean distance from `p` to the segment [a, b].
inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

/// Distance of every pixel center to the light source, in frame-diagonal units.
inline Grid<double> distance_field(const LightSpec& spec, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw ArgumentError("mask dimensions must be positive");
  spec.validate();
  const LightSpec s = spec.clamped();
  const Point2 b = s.anchor_b.value_or(s.anchor_a);
  const double diagonal = std::sqrt(2.0);

  Grid<double> out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const double py = pixel_center(y, height);
    for (std::size_t x = 0; x < width; ++x) {
      const Point2 p{pixel_center(x, width), py};
      out(x, y) = point_segment_distance(p, s.anchor_a, b) / diagonal;
    }
  }
  return out;
}

/// Linear falloff: 1 at the source, 0 at and beyond `spec.radius`.
inline LightMask make_light_mask(const LightSpec& spec, std::size_t width, std::size_t height) {
  Grid<double> d = distance_field(spec, width, height);
  for (double& v : d) v = std::max(0.0, 1.0 - v / spec.radius);
  return LightMask(std::move(d));
}

inline LightMask resample_mask(const LightMask& mask, std::size_t width, std::size_t height) {
  Grid<double> out = resample_bilinear(mask.grid(), width, height);
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return LightMask(std::move(out));
}

inline LightMask mirror_horizontal(const LightMask& mask) { return LightMask(mirror_horizontal(mask.grid())); }

// ---------------------------------------------------------------------------
// JSON: {"kind": "point"|"segment", "ax", "ay", "bx"?, "by"?, "radius"}

enum class JsonMode { lenient, strict };

inline nlohmann::json to_json(const LightSpec& spec) {
  nlohmann::json j;
  j["kind"] = spec.kind == SourceKind::point ? "point" : "segment";
  j["ax"] = spec.anchor_a.x;
  j["ay"] = spec.anchor_a.y;
  if (spec.anchor_b) {
    j["bx"] = spec.anchor_b->x;
    j["by"] = spec.anchor_b->y;
  }
  j["radius"] = spec.radius;
  return j;
}

inline LightSpec light_spec_from_json(const nlohmann::json& j, JsonMode mode = JsonMode::strict) {
  if (!j.is_object()) throw ArgumentError("light spec must be a JSON object");
  if (mode == JsonMode::strict) {
    for (const auto& [key, _] : j.items()) {
      if (key != "kind" && key != "ax" && key != "ay" && key != "bx" && key != "by" && key != "radius") {
        throw ArgumentError("unknown light spec field '" + key + "'");
      }
    }
  }
  auto number = [&](const char* key) -> double {
    if (!j.contains(key)) throw ArgumentError(std::string("light spec is missing '") + key + "'");
    if (!j.at(key).is_number()) throw ArgumentError(std::string("light spec field '") + key + "' must be a number");
    return j.at(key).get<double>();
  };

  LightSpec spec;
  const std::string kind = j.contains("kind") && j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
  if (kind == "point") {
    spec.kind = SourceKind::point;
    if (j.contains("bx") || j.contains("by")) throw ArgumentError("point light must not carry bx/by");
  } else if (kind == "segment") {
    spec.kind = SourceKind::segment;
    spec.anchor_b = Point2{number("bx"), number("by")};
  } else {
    throw ArgumentError("light spec 'kind' must be \"point\" or \"segment\"");
  }
  spec.anchor_a = Point2{number("ax"), number("ay")};
  spec.radius = number("radius");
  spec.validate();
  return spec.clamped();
}

}  // namespace lgtm
