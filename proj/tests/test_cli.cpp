#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "lgtm/cli.hpp"

using namespace lgtm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome lgtm_run(std::vector<std::string> args) {
  args.insert(args.begin(), "lgtm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("lgtm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    unsetenv("LGTM_BACKEND");
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  void put(const std::string& name, const std::string& text) const {
    write_file(dir / name, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

  fs::path dir;
};

}  // namespace

TEST_F(CliTest, MaskCenterPixelIsFullScale) {
  // 65 pixels put a pixel center exactly at 0.5
  ASSERT_EQ(lgtm_run({"mask", "--point", "0.5,0.5", "--radius", "0.5", "--size", "65x65", "--out", path("m.png")}).code, 0);
  EXPECT_EQ(read_mask_png(path("m.png"))(32, 32), 1.0);
}

TEST_F(CliTest, MaskEvenSizeCenterIsNearFullScale) {
  ASSERT_EQ(lgtm_run({"mask", "--point", "0.5,0.5", "--radius", "0.5", "--size", "64x64", "--out", path("m.png")}).code, 0);
  const auto m = read_mask_png(path("m.png"));
  // nearest pixel centers are half a pixel off in x and y
  const double d = std::hypot(0.5 / 64, 0.5 / 64) / std::sqrt(2.0);
  EXPECT_NEAR(m(32, 32), 1.0 - d / 0.5, 1.0 / 65535);
}

TEST_F(CliTest, MaskZeroRadiusIsArgumentError) {
  const auto r = lgtm_run({"mask", "--point", "0.5,0.5", "--radius", "0", "--out", path("m.png")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("radius"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("m.png")));
}

TEST_F(CliTest, MaskArgumentErrors) {
  EXPECT_EQ(lgtm_run({"mask", "--out", path("m.png")}).code, 2);
  EXPECT_EQ(lgtm_run({"mask", "--point", "0.5", "--radius", "1", "--out", path("m.png")}).code, 2);
  EXPECT_EQ(lgtm_run({"mask", "--point", "0.5,0.5", "--out", path("m.png")}).code, 2);
  EXPECT_EQ(lgtm_run({"mask", "--point", "0.5,0.5", "--radius", "1", "--size", "64", "--out", path("m.png")}).code, 2);
  EXPECT_EQ(lgtm_run({"mask", "--point", "0.5,0.5", "--segment", "0,0,1,1", "--radius", "1", "--out", path("m.png")}).code, 2);
  EXPECT_EQ(lgtm_run({"mask", "--point", "0.5,0.5", "--radius", "1", "--bogus", "--out", path("m.png")}).code, 2);
  EXPECT_EQ(lgtm_run({}).code, 2);
}

TEST_F(CliTest, MaskIoErrors) {
  EXPECT_EQ(lgtm_run({"mask", "--point", "0.5,0.5", "--radius", "1", "--out", path("no/such/dir/m.png")}).code, 1);
  EXPECT_EQ(lgtm_run({"mask", "--from", path("missing.png"), "--out", path("m.png")}).code, 1);
}

TEST_F(CliTest, MaskImportReexportByteIdentical) {
  ASSERT_EQ(lgtm_run({"mask", "--segment", "0,0.2,0.3,1", "--radius", "0.7", "--size", "96x64", "--out", path("a.png")}).code, 0);
  ASSERT_EQ(lgtm_run({"mask", "--from", path("a.png"), "--out", path("b.png")}).code, 0);
  EXPECT_EQ(read_file(path("a.png")), read_file(path("b.png")));
}

TEST_F(CliTest, MaskFromSpecFile) {
  put("spec.json", R"({"kind":"point","ax":0.25,"ay":0.5,"radius":0.8})");
  ASSERT_EQ(lgtm_run({"mask", "--light-spec", path("spec.json"), "--size", "32x32", "--out", path("a.png")}).code, 0);
  ASSERT_EQ(lgtm_run({"mask", "--point", "0.25,0.5", "--radius", "0.8", "--size", "32x32", "--out", path("b.png")}).code, 0);
  EXPECT_EQ(read_file(path("a.png")), read_file(path("b.png")));
  put("bad.json", R"({"kind":"point","ax":0.25,"ay":0.5,"radius":0.8,"color":"red"})");
  EXPECT_EQ(lgtm_run({"mask", "--light-spec", path("bad.json"), "--out", path("c.png")}).code, 2);
}

TEST_F(CliTest, NoiseDeterministicAndRoundTrips) {
  ASSERT_EQ(lgtm_run({"noise", "--seed", "42", "--size", "64x64", "--out", path("a.ltz")}).code, 0);
  ASSERT_EQ(lgtm_run({"noise", "--seed", "42", "--size", "64x64", "--out", path("b.ltz")}).code, 0);
  EXPECT_EQ(read_file(path("a.ltz")), read_file(path("b.ltz")));
  const auto z = read_ltz(path("a.ltz"));
  EXPECT_EQ(z, sample_initial_noise(42, {8, 8}));
  EXPECT_EQ(encode_ltz(z), read_file(path("a.ltz")));
}

TEST_F(CliTest, GuideZeroMaskIsIdentity) {
  lgtm_run({"noise", "--seed", "1", "--size", "64x64", "--out", path("z.ltz")});
  lgtm_run({"mask", "--point", "-0.5,-0.5", "--radius", "0.01", "--size", "8x8", "--out", path("m.png")});
  ASSERT_EQ(lgtm_run({"guide", "--latents", path("z.ltz"), "--mask", path("m.png"), "--out", path("g.ltz")}).code, 0);
  EXPECT_EQ(read_file(path("z.ltz")), read_file(path("g.ltz")));
}

TEST_F(CliTest, GuideUnitMaskDoublesChannelOne) {
  lgtm_run({"noise", "--seed", "1", "--size", "64x64", "--out", path("z.ltz")});
  write_mask_png(path("m.png"), LightMask::constant(8, 8, 1.0));
  ASSERT_EQ(lgtm_run({"guide", "--latents", path("z.ltz"), "--mask", path("m.png"), "--out", path("g.ltz")}).code, 0);
  const auto z = read_ltz(path("z.ltz"));
  const auto g = read_ltz(path("g.ltz"));
  for (std::size_t i = 0; i < z.plane_size(); ++i) {
    EXPECT_EQ(static_cast<float>(g.channel(1)[i]), 2.0f * static_cast<float>(z.channel(1)[i]));
  }
  for (int c = 2; c <= 4; ++c) {
    EXPECT_TRUE(std::equal(z.channel(c).begin(), z.channel(c).end(), g.channel(c).begin()));
  }
}

TEST_F(CliTest, GuideMismatchIsContractError) {
  lgtm_run({"noise", "--seed", "1", "--size", "64x64", "--out", path("z.ltz")});
  lgtm_run({"mask", "--point", "0,0.5", "--radius", "0.8", "--size", "64x64", "--out", path("m.png")});
  EXPECT_EQ(lgtm_run({"guide", "--latents", path("z.ltz"), "--mask", path("m.png"), "--out", path("g.ltz")}).code, 3);
  ASSERT_EQ(lgtm_run({"guide", "--latents", path("z.ltz"), "--mask", path("m.png"), "--out", path("g.ltz"), "--resample"}).code, 0);
  const auto expected = apply_light_guidance(read_ltz(path("z.ltz")), resample_mask(read_mask_png(path("m.png")), 8, 8));
  EXPECT_EQ(read_file(path("g.ltz")), encode_ltz(expected));
}

TEST_F(CliTest, GuideRejectsCorruptLatents) {
  put("z.ltz", "LGTMLTZ1garbage");
  write_mask_png(path("m.png"), LightMask::constant(8, 8, 1.0));
  EXPECT_EQ(lgtm_run({"guide", "--latents", path("z.ltz"), "--mask", path("m.png"), "--out", path("g.ltz")}).code, 3);
}

TEST_F(CliTest, GenerateDeterministic) {
  for (const char* name : {"a.png", "b.png"}) {
    ASSERT_EQ(lgtm_run({"generate", "--prompt", "a cat", "--seed", "42", "--backend", "mock", "--size", "128x128",
                        "--out", path(name)})
                  .code,
              0);
  }
  EXPECT_EQ(read_file(path("a.png")), read_file(path("b.png")));
}

TEST_F(CliTest, GenerateMatchesLibraryAndReports) {
  ASSERT_EQ(lgtm_run({"generate", "--prompt", "a cat", "--seed", "7", "--size", "64x64", "--point", "0,0.5", "--radius",
                      "0.8", "--out", path("g.png"), "--report", path("r.json"), "--latents-out", path("z.ltz")})
                .code,
            0);
  GenerationRequest req;
  req.prompt = "a cat";
  req.seed = 7;
  req.output_size = {64, 64};
  req.light = LightSpec::point({0, 0.5}, 0.8);
  MockBackend backend;
  EXPECT_EQ(read_rgb_png(path("g.png")), generate(req, backend).pixels);
  EXPECT_EQ(read_file(path("z.ltz")), encode_ltz(prepare_initial_noise(req, backend)));
  const auto bytes = read_file(path("r.json"));
  const auto report = nlohmann::json::parse(bytes.begin(), bytes.end());
  EXPECT_EQ(report["request_fingerprint"], fingerprint(req));
  EXPECT_EQ(report["request"]["steps"], 50);
  EXPECT_EQ(report["request"]["guidance_scale"], 7.5);
}

TEST_F(CliTest, GenerateErrors) {
  EXPECT_EQ(lgtm_run({"generate", "--seed", "1"}).code, 2);
  EXPECT_EQ(lgtm_run({"generate", "--prompt", "x", "--size", "30x30", "--out", path("a.png")}).code, 2);
  EXPECT_EQ(lgtm_run({"generate", "--prompt", "x", "--steps", "0", "--out", path("a.png")}).code, 2);
  EXPECT_EQ(lgtm_run({"generate", "--prompt", "x", "--backend", "sdxl", "--out", path("a.png")}).code, 2);
  EXPECT_EQ(lgtm_run({"generate", "--prompt", "x", "--backend", "adapter:none", "--out", path("a.png")}).code, 4);
  EXPECT_EQ(lgtm_run({"generate", "--prompt", "x", "--condition", path("missing.bin"), "--out", path("a.png")}).code, 1);
}

TEST_F(CliTest, BackendFromEnvironmentUnderFlags) {
  setenv("LGTM_BACKEND", "adapter:none", 1);
  EXPECT_EQ(lgtm_run({"generate", "--prompt", "x", "--size", "16x16", "--out", path("a.png")}).code, 4);
  EXPECT_EQ(lgtm_run({"generate", "--prompt", "x", "--size", "16x16", "--backend", "mock", "--out", path("a.png")}).code, 0);
  put("cfg.json", R"({"backend": "mock"})");
  EXPECT_EQ(lgtm_run({"generate", "--config", path("cfg.json"), "--prompt", "x", "--size", "16x16", "--out", path("b.png")}).code, 0);
  unsetenv("LGTM_BACKEND");
}

TEST_F(CliTest, ConfigFileMergesUnderFlags) {
  put("cfg.json", R"({"prompt": "a dog", "seeds": [0, 1], "channels": [1], "alphas": [0.5, 1, 2], "size": "64x64"})");
  auto r = lgtm_run({"sweep", "--config", path("cfg.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["prompt"], "a dog");
  EXPECT_EQ(j["seeds"], nlohmann::json({0, 1}));
  EXPECT_EQ(j["entries"].size(), 6u);

  r = lgtm_run({"sweep", "--config", path("cfg.json"), "--channels", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["channels"], nlohmann::json({3}));

  put("bad.json", R"({"no_such_flag": 1})");
  EXPECT_EQ(lgtm_run({"sweep", "--config", path("bad.json")}).code, 2);
  put("broken.json", "{");
  EXPECT_EQ(lgtm_run({"sweep", "--config", path("broken.json")}).code, 2);
  EXPECT_EQ(lgtm_run({"sweep", "--config", path("missing.json")}).code, 1);
}

TEST_F(CliTest, SweepReportMonotone) {
  const auto r = lgtm_run({"sweep", "--prompt", "a cat", "--seeds", "0,1", "--channels", "1", "--alphas", "0.5,1,2",
                           "--backend", "mock", "--size", "64x64", "--report", path("s.json"), "--csv", path("s.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto bytes = read_file(path("s.json"));
  const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
  ASSERT_EQ(j["entries"].size(), 6u);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& e = j["entries"];
    EXPECT_LT(e[3 * s]["mean_luminance"].get<double>(), e[3 * s + 1]["mean_luminance"].get<double>());
    EXPECT_LT(e[3 * s + 1]["mean_luminance"].get<double>(), e[3 * s + 2]["mean_luminance"].get<double>());
  }
  EXPECT_TRUE(fs::exists(path("s.csv")));
  EXPECT_EQ(lgtm_run({"sweep", "--alphas", "0.5,2"}).code, 2);
  EXPECT_EQ(lgtm_run({"sweep", "--channels", "5"}).code, 2);
  EXPECT_EQ(lgtm_run({"sweep", "--seeds", "-1"}).code, 2);
}

TEST_F(CliTest, FixturesThenEvalIsPerfect) {
  ASSERT_EQ(lgtm_run({"fixtures", "--out", path("ds"), "--per-direction", "20"}).code, 0);
  const auto r = lgtm_run({"eval", "--dataset", path("ds"), "--report", path("e.json"), "--table", path("t.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto bytes = read_file(path("e.json"));
  const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
  EXPECT_EQ(j["accuracy_left"], 1.0);
  EXPECT_EQ(j["accuracy_right"], 1.0);
  const auto table = read_file(path("t.txt"));
  EXPECT_NE(std::string(table.begin(), table.end()).find("LGTM"), std::string::npos);
}

TEST_F(CliTest, EvalErrors) {
  EXPECT_EQ(lgtm_run({"eval", "--dataset", path("missing")}).code, 1);
  put("manifest.json", "[1, 2]");
  EXPECT_EQ(lgtm_run({"eval", "--dataset", dir.string()}).code, 3);
  EXPECT_EQ(lgtm_run({"eval", "--dataset", dir.string(), "--expand", "0.5"}).code, 2);
}

TEST_F(CliTest, HelpListsFlags) {
  const auto r = lgtm_run({"generate", "--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--prompt", "--negative-prompt", "--seed", "--steps", "--guidance-scale", "--size", "--point",
                           "--segment", "--radius", "--condition", "--backend", "--out", "--report", "--config"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  EXPECT_EQ(lgtm_run({"--help"}).code, 0);
}
