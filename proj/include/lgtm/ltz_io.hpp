#pragma once

// LTZ latent tensor files:
//
//   bytes 0..7   magic "LGTMLTZ1"
//   bytes 8..11  header length N, uint32 little-endian
//   next N bytes JSON header {channels, height, width, seed, timestep,
//                dtype: "f32le", order: "channel-major row-major"}
//   remainder    channels*height*width float32 little-endian values

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lgtm/latent.hpp"
#include "lgtm/png_io.hpp"

namespace lgtm {

inline constexpr std::string_view kLtzMagic = "LGTMLTZ1";
inline constexpr std::string_view kLtzDtype = "f32le";
inline constexpr std::string_view kLtzOrder = "channel-major row-major";

namespace detail {

inline void put_u32le(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32le(std::span<const std::uint8_t> in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline Bytes encode_ltz(const LatentNoise& z) {
  const nlohmann::json header = {
      {"channels", kLatentChannels}, {"height", z.height()},     {"width", z.width()},
      {"seed", z.seed()},            {"timestep", z.timestep()}, {"dtype", kLtzDtype},
      {"order", kLtzOrder},
  };
  const std::string text = header.dump();

  Bytes out(kLtzMagic.begin(), kLtzMagic.end());
  detail::put_u32le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + 4 * z.values().size());
  for (double v : z.values()) detail::put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

inline LatentNoise decode_ltz(std::span<const std::uint8_t> bytes) {
  const std::size_t prefix = kLtzMagic.size() + 4;
  if (bytes.size() < prefix || std::memcmp(bytes.data(), kLtzMagic.data(), kLtzMagic.size()) != 0) {
    throw ContractError("not an LTZ file (bad magic)");
  }
  const std::uint32_t header_len = detail::get_u32le(bytes.subspan(kLtzMagic.size(), 4));
  if (bytes.size() - prefix < header_len) throw ContractError("LTZ header is truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + prefix, bytes.begin() + prefix + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("LTZ header is not valid JSON: ") + e.what());
  }

  std::size_t channels = 0, height = 0, width = 0;
  std::uint64_t seed = 0;
  std::int64_t timestep = 0;
  try {
    channels = header.at("channels").get<std::size_t>();
    height = header.at("height").get<std::size_t>();
    width = header.at("width").get<std::size_t>();
    seed = header.at("seed").get<std::uint64_t>();
    timestep = header.at("timestep").get<std::int64_t>();
    if (header.at("dtype").get<std::string>() != kLtzDtype) throw ContractError("LTZ dtype must be f32le");
    if (header.at("order").get<std::string>() != kLtzOrder) throw ContractError("unsupported LTZ value order");
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("malformed LTZ header: ") + e.what());
  }
  if (channels != kLatentChannels) throw ContractError("LTZ latent must have 4 channels");

  const auto payload = bytes.subspan(prefix + header_len);
  const std::size_t count = channels * height * width;
  if (payload.size() != 4 * count) {
    throw ContractError("LTZ payload is " + std::to_string(payload.size()) + " bytes, expected " +
                        std::to_string(4 * count));
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<float>(detail::get_u32le(payload.subspan(4 * i, 4)));
  }
  return LatentNoise(LatentDims{height, width}, std::move(values), seed, timestep);
}

inline void write_ltz(const std::filesystem::path& path, const LatentNoise& z) { write_file(path, encode_ltz(z)); }
inline LatentNoise read_ltz(const std::filesystem::path& path) { return decode_ltz(read_file(path)); }

}  // namespace lgtm
