#pragma once

// Backend contract driven by the light-guided pipeline, the built-in mock
// decoder, adapter registry, and the generate() orchestration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lgtm/error.hpp"
#include "lgtm/hash.hpp"
#include "lgtm/image.hpp"
#include "lgtm/latent.hpp"
#include "lgtm/light_mask.hpp"

namespace lgtm {

inline constexpr std::size_t kLatentDownscale = 8;

struct ImageSize {
  std::size_t width = 512;
  std::size_t height = 512;

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// (H / 8, W / 8). Rejects sizes that are not positive multiples of 8.
inline LatentDims latent_dims(ImageSize size) {
  if (size.width == 0 || size.height == 0 || size.width % kLatentDownscale != 0 ||
      size.height % kLatentDownscale != 0) {
    throw ArgumentError("output size " + std::to_string(size.width) + "x" + std::to_string(size.height) +
                        " must be a positive multiple of 8 in both dimensions");
  }
  return {size.height / kLatentDownscale, size.width / kLatentDownscale};
}

struct GenerationRequest {
  std::string prompt;
  std::optional<std::string> negative_prompt;
  std::optional<LightSpec> light;
  std::uint64_t seed = 0;
  int steps = 50;
  double guidance_scale = 7.5;
  /// Opaque structural conditioning (for example an encoded edge map). The
  /// pipeline never inspects it; backends receive it unchanged.
  std::optional<std::string> structural_condition;
  ImageSize output_size;

  void validate() const {
    if (steps < 1) throw ArgumentError("steps must be >= 1");
    if (!std::isfinite(guidance_scale) || guidance_scale < 0.0) {
      throw ArgumentError("guidance_scale must be finite and >= 0");
    }
    latent_dims(output_size);
    if (light) light->validate();
  }

  friend bool operator==(const GenerationRequest&, const GenerationRequest&) = default;
};

inline nlohmann::json to_json(const GenerationRequest& r) {
  nlohmann::json j = {
      {"prompt", r.prompt},
      {"seed", r.seed},
      {"steps", r.steps},
      {"guidance_scale", r.guidance_scale},
      {"width", r.output_size.width},
      {"height", r.output_size.height},
  };
  if (r.negative_prompt) j["negative_prompt"] = *r.negative_prompt;
  if (r.light) j["light"] = to_json(*r.light);
  if (r.structural_condition) j["structural_condition"] = base64_encode(*r.structural_condition);
  return j;
}

inline GenerationRequest generation_request_from_json(const nlohmann::json& j, JsonMode mode = JsonMode::strict) {
  if (!j.is_object()) throw ArgumentError("generation request must be a JSON object");
  static const std::vector<std::string> known = {"prompt", "negative_prompt",      "light", "seed", "steps",
                                                 "guidance_scale", "structural_condition", "width", "height"};
  if (mode == JsonMode::strict) {
    for (const auto& [key, _] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw ArgumentError("unknown request field '" + key + "'");
      }
    }
  }

  GenerationRequest r;
  try {
    if (!j.contains("prompt") || !j.at("prompt").is_string()) throw ArgumentError("request requires a string 'prompt'");
    r.prompt = j.at("prompt").get<std::string>();
    if (j.contains("negative_prompt") && !j.at("negative_prompt").is_null()) {
      r.negative_prompt = j.at("negative_prompt").get<std::string>();
    }
    if (j.contains("light") && !j.at("light").is_null()) r.light = light_spec_from_json(j.at("light"), mode);
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ArgumentError("seed must be a non-negative integer");
      r.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("steps")) {
      if (!j.at("steps").is_number_integer()) throw ArgumentError("steps must be an integer");
      r.steps = j.at("steps").get<int>();
    }
    if (j.contains("guidance_scale")) r.guidance_scale = j.at("guidance_scale").get<double>();
    if (j.contains("structural_condition") && !j.at("structural_condition").is_null()) {
      r.structural_condition = base64_decode(j.at("structural_condition").get<std::string>());
    }
    if (j.contains("width")) r.output_size.width = j.at("width").get<std::size_t>();
    if (j.contains("height")) r.output_size.height = j.at("height").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("malformed generation request: ") + e.what());
  } catch (const ContractError& e) {
    throw ArgumentError(std::string("malformed structural_condition: ") + e.what());
  }
  r.validate();
  return r;
}

/// Stable content hash of a request (SHA-256 of its canonical JSON).
inline std::string fingerprint(const GenerationRequest& r) { return sha256_hex(to_json(r).dump()); }

struct GeneratedImage {
  RgbImage pixels;
  std::string request_fingerprint;

  std::size_t width() const noexcept { return pixels.width(); }
  std::size_t height() const noexcept { return pixels.height(); }
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;

  virtual LatentDims latent_dims(ImageSize size) const { return lgtm::latent_dims(size); }

  /// Turns externally supplied initial noise into an image. Implementations
  /// must be deterministic for a fixed (request, noise) pair and must hand
  /// `request.structural_condition` to the model untouched.
  virtual GeneratedImage denoise(const GenerationRequest& request, const LatentNoise& initial_noise) = 0;
};

// ---------------------------------------------------------------------------
// Mock backend

enum class MockDecoder {
  /// luminance = clamp(128 + 40 * u(|z1|)); brighter for larger channel-1 magnitude.
  magnitude,
  /// luminance = clamp(128 + 40 * u(z1)); signed and affine in channel 1.
  affine,
};

/// Direct decoder standing in for a diffusion model: no sampling loop, the
/// initial noise is decoded at once. Channel 1 alone sets luminance; channels
/// 2-4 only move chroma along luma-neutral RGB directions, so the Rec.601
/// luminance plane never depends on them.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockDecoder decoder = MockDecoder::magnitude) : decoder_(decoder) {}

  std::string name() const override { return decoder_ == MockDecoder::magnitude ? "mock" : "adapter:mock-affine"; }

  GeneratedImage denoise(const GenerationRequest& request, const LatentNoise& noise) override {
    const LatentDims expected = latent_dims(request.output_size);
    if (noise.dims() != expected) {
      throw ContractError("initial noise is " + std::to_string(noise.height()) + "x" + std::to_string(noise.width()) +
                          " but the request needs " + std::to_string(expected.height) + "x" +
                          std::to_string(expected.width));
    }
    return GeneratedImage{decode(noise, request.output_size), fingerprint(request)};
  }

  RgbImage decode(const LatentNoise& z, ImageSize size) const {
    Grid<double> brightness = z.channel_grid(1);
    if (decoder_ == MockDecoder::magnitude) {
      for (double& v : brightness) v = std::abs(v);
    }
    const Grid<double> lum = resample_bilinear(brightness, size.width, size.height);
    const Grid<double> c2 = resample_bilinear(z.channel_grid(2), size.width, size.height);
    const Grid<double> c3 = resample_bilinear(z.channel_grid(3), size.width, size.height);
    const Grid<double> c4 = resample_bilinear(z.channel_grid(4), size.width, size.height);

    RgbImage out(size.width, size.height);
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const long luma = std::clamp(std::lround(kGray + kGain * lum.values()[i]), 0L, 255L);
      long k1 = std::lround(1.5 * c2.values()[i] + 0.75 * c4.values()[i]);
      long k2 = std::lround(c3.values()[i] - 0.5 * c4.values()[i]);
      dst[i] = chroma_shifted(luma, k1, k2);
    }
    return out;
  }

  static constexpr double kGray = 128.0;
  static constexpr double kGain = 40.0;

 private:
  // Integer RGB offsets with 299*r + 587*g + 114*b == 0.
  static constexpr long kChromaA[3] = {15, -9, 7};
  static constexpr long kChromaB[3] = {4, -10, 41};

  static Rgb chroma_shifted(long luma, long k1, long k2) {
    for (;;) {
      long c[3];
      bool in_range = true;
      for (int i = 0; i < 3; ++i) {
        c[i] = luma + k1 * kChromaA[i] + k2 * kChromaB[i];
        in_range = in_range && c[i] >= 0 && c[i] <= 255;
      }
      if (in_range) {
        return Rgb{static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]), static_cast<std::uint8_t>(c[2])};
      }
      // Shrink towards gray, which is always representable.
      if (k2 != 0) {
        k2 += k2 > 0 ? -1 : 1;
      } else {
        k1 += k1 > 0 ? -1 : 1;
      }
    }
  }

  MockDecoder decoder_;
};

// ---------------------------------------------------------------------------
// Backend selection: "mock" | "adapter:<name>"

using BackendFactory = std::function<std::unique_ptr<Backend>()>;

class BackendRegistry {
 public:
  static BackendRegistry& instance() {
    static BackendRegistry registry;
    return registry;
  }

  /// Integrators call this (directly or through AdapterRegistration) before
  /// the first make_backend() for their adapter name.
  void register_adapter(const std::string& name, BackendFactory factory) {
    if (name.empty()) throw ArgumentError("adapter name must not be empty");
    std::lock_guard lock(mutex_);
    factories_[name] = std::move(factory);
  }

  bool contains(const std::string& name) const {
    std::lock_guard lock(mutex_);
    return factories_.count(name) != 0;
  }

  std::vector<std::string> adapter_names() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> names;
    for (const auto& [name, _] : factories_) names.push_back(name);
    return names;
  }

  std::unique_ptr<Backend> create(std::string_view selection) const {
    if (selection == "mock") return std::make_unique<MockBackend>();
    constexpr std::string_view prefix = "adapter:";
    if (selection.substr(0, prefix.size()) != prefix || selection.size() == prefix.size()) {
      throw ArgumentError("backend must be \"mock\" or \"adapter:<name>\", got \"" + std::string(selection) + "\"");
    }
    const std::string name(selection.substr(prefix.size()));
    BackendFactory factory;
    {
      std::lock_guard lock(mutex_);
      auto it = factories_.find(name);
      if (it == factories_.end()) throw BackendError("backend adapter '" + name + "' is not registered");
      factory = it->second;
    }
    auto backend = factory();
    if (!backend) throw BackendError("backend adapter '" + name + "' is unavailable");
    return backend;
  }

 private:
  BackendRegistry() {
    factories_["mock-affine"] = [] { return std::make_unique<MockBackend>(MockDecoder::affine); };
  }

  mutable std::mutex mutex_;
  std::map<std::string, BackendFactory> factories_;
};

/// Static-initialization hook: `static lgtm::AdapterRegistration reg{"name", factory};`
struct AdapterRegistration {
  AdapterRegistration(const std::string& name, BackendFactory factory) {
    BackendRegistry::instance().register_adapter(name, std::move(factory));
  }
};

inline std::unique_ptr<Backend> make_backend(std::string_view selection) {
  return BackendRegistry::instance().create(selection);
}

// ---------------------------------------------------------------------------
// Pipeline

/// Seeded initial noise with light guidance applied once, at t = T. The mask
/// is rendered at image resolution and resampled to latent resolution.
inline LatentNoise prepare_initial_noise(const GenerationRequest& request, const Backend& backend,
                                         GuidanceOptions options = {}) {
  const LatentDims dims = backend.latent_dims(request.output_size);
  LatentNoise z = sample_initial_noise(request.seed, dims);
  if (request.light) {
    const LightMask full = make_light_mask(*request.light, request.output_size.width, request.output_size.height);
    z = apply_light_guidance(z, resample_mask(full, dims.width, dims.height), options);
  }
  return z;
}

inline GeneratedImage generate(const GenerationRequest& request, Backend& backend, GuidanceOptions options = {}) {
  request.validate();
  const LatentNoise z = prepare_initial_noise(request, backend, options);
  GeneratedImage image = backend.denoise(request, z);
  if (image.width() != request.output_size.width || image.height() != request.output_size.height) {
    throw BackendError("backend '" + backend.name() + "' returned an image of the wrong size");
  }
  image.request_fingerprint = fingerprint(request);
  return image;
}

}  // namespace lgtm
