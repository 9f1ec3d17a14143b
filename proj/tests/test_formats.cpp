#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <random>

#include "lgtm/hash.hpp"
#include "lgtm/ltz_io.hpp"
#include "lgtm/png_io.hpp"

using namespace lgtm;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lgtm_formats_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Ltz, LayoutIsMagicLengthHeaderPayload) {
  const auto z = sample_initial_noise(5, {2, 3}, 777);
  const Bytes bytes = encode_ltz(z);
  ASSERT_EQ(std::memcmp(bytes.data(), "LGTMLTZ1", 8), 0);
  const std::uint32_t len = bytes[8] | bytes[9] << 8 | bytes[10] << 16 | static_cast<std::uint32_t>(bytes[11]) << 24;
  const auto header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  EXPECT_EQ(header["channels"], 4);
  EXPECT_EQ(header["height"], 2);
  EXPECT_EQ(header["width"], 3);
  EXPECT_EQ(header["seed"], 5);
  EXPECT_EQ(header["timestep"], 777);
  EXPECT_EQ(header["dtype"], "f32le");
  EXPECT_EQ(header["order"], "channel-major row-major");
  ASSERT_EQ(bytes.size(), 12 + len + 4 * 24);

  // first payload float is channel 1, row 0, column 0, little-endian
  const std::size_t p = 12 + len;
  const std::uint32_t bits = bytes[p] | bytes[p + 1] << 8 | bytes[p + 2] << 16 | static_cast<std::uint32_t>(bytes[p + 3]) << 24;
  EXPECT_EQ(std::bit_cast<float>(bits), static_cast<float>(z.at(1, 0, 0)));
}

TEST(Ltz, RoundTripByteIdentical) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto z = sample_initial_noise(seed, {1 + seed % 5, 2 + seed % 3});
    const Bytes first = encode_ltz(z);
    const LatentNoise back = decode_ltz(first);
    EXPECT_EQ(back, z);
    EXPECT_EQ(encode_ltz(back), first);
  }
}

TEST(Ltz, FileRoundTrip) {
  const auto dir = temp_dir("ltz");
  const auto z = sample_initial_noise(3, {4, 4});
  write_ltz(dir / "z.ltz", z);
  EXPECT_EQ(read_ltz(dir / "z.ltz"), z);
  EXPECT_THROW(read_ltz(dir / "missing.ltz"), IoError);
}

TEST(Ltz, RejectsPayloadLengthMismatch) {
  Bytes bytes = encode_ltz(sample_initial_noise(1, {2, 2}));
  Bytes shorter(bytes.begin(), bytes.end() - 1);
  EXPECT_THROW(decode_ltz(shorter), ContractError);
  bytes.push_back(0);
  EXPECT_THROW(decode_ltz(bytes), ContractError);
}

TEST(Ltz, RejectsCorruptHeaders) {
  const Bytes good = encode_ltz(sample_initial_noise(1, {2, 2}));
  Bytes bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_ltz(bad_magic), ContractError);
  EXPECT_THROW(decode_ltz(Bytes(good.begin(), good.begin() + 10)), ContractError);

  Bytes huge_len = good;
  huge_len[11] = 0x7f;
  EXPECT_THROW(decode_ltz(huge_len), ContractError);

  auto with_header = [](const nlohmann::json& h, std::size_t floats) {
    const std::string text = h.dump();
    Bytes b(kLtzMagic.begin(), kLtzMagic.end());
    detail::put_u32le(b, static_cast<std::uint32_t>(text.size()));
    b.insert(b.end(), text.begin(), text.end());
    b.resize(b.size() + 4 * floats, 0);
    return b;
  };
  const nlohmann::json base = {{"channels", 4}, {"height", 1}, {"width", 1}, {"seed", 0},
                               {"timestep", 1000}, {"dtype", "f32le"}, {"order", "channel-major row-major"}};
  EXPECT_NO_THROW(decode_ltz(with_header(base, 4)));
  auto three = base;
  three["channels"] = 3;
  EXPECT_THROW(decode_ltz(with_header(three, 3)), ContractError);
  auto f64 = base;
  f64["dtype"] = "f64le";
  EXPECT_THROW(decode_ltz(with_header(f64, 4)), ContractError);
  auto missing = base;
  missing.erase("width");
  EXPECT_THROW(decode_ltz(with_header(missing, 4)), ContractError);
}

TEST(MaskPng, StoresRoundedSixteenBitValues) {
  const LightMask m(Grid<double>(3, 1, std::vector<double>{0.0, 0.5, 1.0}));
  const LightMask back = decode_mask_png(encode_mask_png(m));
  EXPECT_EQ(back(0, 0), 0.0);
  EXPECT_EQ(back(1, 0), 32768.0 / 65535.0);
  EXPECT_EQ(back(2, 0), 1.0);
}

TEST(MaskPng, ExactRoundTripOnSixteenBitGrid) {
  std::mt19937_64 rng(2);
  std::vector<double> v(50 * 30);
  for (double& x : v) x = static_cast<double>(rng() % 65536) / 65535.0;
  const LightMask m(Grid<double>(50, 30, v));
  const Bytes first = encode_mask_png(m);
  const LightMask back = decode_mask_png(first);
  EXPECT_EQ(back.grid(), m.grid());
  EXPECT_EQ(encode_mask_png(back), first);
}

TEST(MaskPng, ExportImportExportByteIdentical) {
  const auto m = make_light_mask(LightSpec::segment({0.1, 0.2}, {0.9, 0.3}, 0.6), 64, 48);
  const Bytes first = encode_mask_png(m);
  EXPECT_EQ(encode_mask_png(decode_mask_png(first)), first);
}

TEST(MaskPng, RejectsEightBitOrColor) {
  RgbImage rgb(4, 4, Rgb{1, 2, 3});
  EXPECT_THROW(decode_mask_png(encode_rgb_png(rgb)), ContractError);
  EXPECT_THROW(decode_mask_png(Bytes{1, 2, 3}), ContractError);
}

TEST(RgbPng, RoundTrip) {
  std::mt19937_64 rng(6);
  RgbImage img(17, 9);
  for (auto& p : img) p = Rgb{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
  const Bytes bytes = encode_rgb_png(img);
  EXPECT_EQ(decode_rgb_png(bytes), img);
  EXPECT_EQ(encode_rgb_png(decode_rgb_png(bytes)), bytes);
}

TEST(Files, WriteAndReadBack) {
  const auto dir = temp_dir("files");
  const auto m = make_light_mask(LightSpec::point({0.5, 0.5}, 0.5), 8, 8);
  write_mask_png(dir / "m.png", m);
  EXPECT_EQ(encode_mask_png(read_mask_png(dir / "m.png")), encode_mask_png(m));
  EXPECT_THROW(read_file(dir / "nope.bin"), IoError);
  EXPECT_THROW(write_file(dir / "no" / "such" / "dir" / "x.bin", Bytes{1}), IoError);
}

TEST(Base64, RoundTripsBinary) {
  for (std::size_t n = 0; n < 10; ++n) {
    std::string bytes;
    for (std::size_t i = 0; i < n; ++i) bytes.push_back(static_cast<char>(0xf0 + i));
    EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  }
  EXPECT_EQ(base64_encode("edge"), "ZWRnZQ==");
  EXPECT_THROW(base64_decode("abc"), ContractError);
}
