#include <gtest/gtest.h>

#include "lgtm/sensitivity.hpp"

using namespace lgtm;

namespace {

SweepConfig small_config(std::vector<int> channels, std::vector<double> alphas) {
  SweepConfig c;
  c.prompt = "a cat";
  c.seeds = {0, 1, 2};
  c.channels = std::move(channels);
  c.alphas = std::move(alphas);
  c.output_size = {64, 64};
  return c;
}

const SweepEntry& find(const SweepReport& r, std::uint64_t seed, int channel, double alpha) {
  for (const auto& e : r.entries) {
    if (e.seed == seed && e.channel == channel && e.alpha == alpha) return e;
  }
  throw std::runtime_error("entry not found");
}

}  // namespace

TEST(LuminanceStats, UniformGray) {
  const auto s = luminance_stats(RgbImage(10, 6, Rgb{128, 128, 128}));
  EXPECT_DOUBLE_EQ(s.mean_luminance, 128.0);
  EXPECT_NEAR(s.centroid.x, 0.5, 1e-12);
  EXPECT_NEAR(s.centroid.y, 0.5, 1e-12);
}

TEST(LuminanceStats, WhiteLeftHalf) {
  const std::size_t w = 64, h = 8;
  RgbImage img(w, h, Rgb{0, 0, 0});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w / 2; ++x) img(x, y) = Rgb{255, 255, 255};
  }
  // discrete oracle: mean of pixel centers (x + 0.5) / w over the left half
  double sum = 0.0;
  for (std::size_t x = 0; x < w / 2; ++x) sum += (x + 0.5) / w;
  const double oracle = sum / (w / 2);
  EXPECT_DOUBLE_EQ(oracle, 0.25);
  const auto s = luminance_stats(img);
  EXPECT_NEAR(s.centroid.x, oracle, 1e-12);
  EXPECT_NEAR(s.centroid.y, 0.5, 1e-12);
  EXPECT_NEAR(s.mean_luminance, 127.5, 1e-12);
}

TEST(LuminanceStats, AllBlackConvention) {
  const auto s = luminance_stats(RgbImage(5, 5));
  EXPECT_EQ(s.mean_luminance, 0.0);
  EXPECT_EQ(s.centroid.x, 0.5);
  EXPECT_EQ(s.centroid.y, 0.5);
}

TEST(LuminanceStats, Rec601Weights) {
  EXPECT_DOUBLE_EQ(luminance_stats(RgbImage(1, 1, Rgb{255, 0, 0})).mean_luminance, 0.299 * 255);
  EXPECT_DOUBLE_EQ(luminance_stats(RgbImage(1, 1, Rgb{0, 255, 0})).mean_luminance, 0.587 * 255);
  EXPECT_DOUBLE_EQ(luminance_stats(RgbImage(1, 1, Rgb{0, 0, 255})).mean_luminance, 0.114 * 255);
  EXPECT_THROW(luminance_stats(RgbImage()), ArgumentError);
}

TEST(SweepConfigTest, Validation) {
  auto c = small_config({1}, {0.5, 2.0});
  EXPECT_THROW(c.validate(), ArgumentError);  // no reference alpha
  c = small_config({0}, {1.0});
  EXPECT_THROW(c.validate(), ArgumentError);
  c = small_config({1}, {1.0, NAN});
  EXPECT_THROW(c.validate(), ArgumentError);
  c = small_config({1}, {1.0});
  c.seeds.clear();
  EXPECT_THROW(c.validate(), ArgumentError);
  c = small_config({1}, {1.0});
  c.output_size = {30, 30};
  EXPECT_THROW(c.validate(), ArgumentError);
  EXPECT_EQ(SweepConfig{}.alphas, (std::vector<double>{0.25, 0.5, 1.0, 2.0, 4.0}));
}

TEST(RunSweep, CardinalityAndOrder) {
  MockBackend backend;
  const auto r = run_sweep(small_config({1, 3}, {0.5, 1.0, 2.0}), backend);
  ASSERT_EQ(r.entries.size(), 3u * 2u * 3u);
  EXPECT_EQ(r.entries[0].seed, 0u);
  EXPECT_EQ(r.entries[0].channel, 1);
  EXPECT_EQ(r.entries[0].alpha, 0.5);
  EXPECT_EQ(r.entries.back().seed, 2u);
  EXPECT_EQ(r.entries.back().channel, 3);
  EXPECT_EQ(r.entries.back().alpha, 2.0);
}

TEST(RunSweep, ChannelOneStrictlyIncreasing) {
  MockBackend backend;
  const auto r = run_sweep(small_config({1}, {0.5, 1.0, 2.0}), backend);
  for (std::uint64_t seed : {0, 1, 2}) {
    EXPECT_LT(find(r, seed, 1, 0.5).mean_luminance, find(r, seed, 1, 1.0).mean_luminance);
    EXPECT_LT(find(r, seed, 1, 1.0).mean_luminance, find(r, seed, 1, 2.0).mean_luminance);
  }
}

TEST(RunSweep, OtherChannelsLeaveLuminanceConstant) {
  MockBackend backend;
  const auto r = run_sweep(small_config({2, 3, 4}, {0.5, 1.0, 2.0}), backend);
  for (std::uint64_t seed : {0, 1, 2}) {
    for (int c : {2, 3, 4}) {
      const double ref = find(r, seed, c, 1.0).mean_luminance;
      EXPECT_NEAR(find(r, seed, c, 0.5).mean_luminance, ref, 1e-6);
      EXPECT_NEAR(find(r, seed, c, 2.0).mean_luminance, ref, 1e-6);
      EXPECT_GT(find(r, seed, c, 2.0).mean_chroma_shift, 0.0);
    }
  }
}

TEST(RunSweep, ReferenceRowsMatchUnperturbedGeneration) {
  MockBackend backend;
  const auto config = small_config({1, 2, 3, 4}, {1.0, 2.0});
  const auto r = run_sweep(config, backend);
  for (std::uint64_t seed : config.seeds) {
    GenerationRequest req;
    req.prompt = config.prompt;
    req.seed = seed;
    req.output_size = config.output_size;
    const auto base = luminance_stats(generate(req, backend).pixels);
    for (int c = 1; c <= 4; ++c) {
      const auto& e = find(r, seed, c, 1.0);
      EXPECT_EQ(e.mean_luminance, base.mean_luminance);
      EXPECT_EQ(e.luminance_centroid.x, base.centroid.x);
      EXPECT_EQ(e.luminance_centroid.y, base.centroid.y);
      EXPECT_EQ(e.mean_chroma_shift, 0.0);
    }
  }
}

TEST(RunSweep, JsonAndCsv) {
  MockBackend backend;
  const auto r = run_sweep(small_config({1}, {1.0, 2.0}), backend);
  const auto j = to_json(r);
  EXPECT_EQ(j["entries"].size(), 6u);
  EXPECT_EQ(j["alphas"], nlohmann::json({1.0, 2.0}));
  EXPECT_TRUE(j["entries"][0].contains("luminance_centroid"));
  const std::string csv = to_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_EQ(csv.rfind("seed,channel,alpha,mean_luminance,centroid_x,centroid_y,mean_chroma_shift\n", 0), 0u);
}

TEST(RunSweep, PropagatesBackendErrors) {
  class Failing final : public Backend {
   public:
    std::string name() const override { return "adapter:failing"; }
    GeneratedImage denoise(const GenerationRequest&, const LatentNoise&) override { throw BackendError("gpu gone"); }
  } failing;
  EXPECT_THROW(run_sweep(small_config({1}, {1.0}), failing), BackendError);
}
