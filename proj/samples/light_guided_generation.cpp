// Generates the same seed with and without a left-edge light and reports how
// far the brightness centroid moved.

#include <iostream>

#include "lgtm/backend.hpp"
#include "lgtm/png_io.hpp"
#include "lgtm/sensitivity.hpp"

int main() {
  lgtm::MockBackend backend;

  lgtm::GenerationRequest request;
  request.prompt = "a cat sitting on a wooden floor";
  request.seed = 42;
  request.output_size = {512, 512};

  const auto plain = lgtm::generate(request, backend);

  request.light = lgtm::LightSpec::point({0.0, 0.5}, 0.8);
  const auto lit = lgtm::generate(request, backend);

  lgtm::write_rgb_png("plain.png", plain.pixels);
  lgtm::write_rgb_png("lit_from_left.png", lit.pixels);
  lgtm::write_mask_png("mask.png", lgtm::make_light_mask(*request.light, 512, 512));

  const auto before = lgtm::luminance_stats(plain.pixels);
  const auto after = lgtm::luminance_stats(lit.pixels);
  std::cout << "centroid x: " << before.centroid.x << " -> " << after.centroid.x << '\n'
            << "mean luminance: " << before.mean_luminance << " -> " << after.mean_luminance << '\n';
}
