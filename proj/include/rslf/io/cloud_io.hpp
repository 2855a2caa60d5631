#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "rslf/error.hpp"
#include "rslf/io/bytes.hpp"
#include "rslf/io/json_io.hpp"
#include "rslf/splat.hpp"

namespace rslf::io {

inline constexpr std::uint32_t kCloudVersion = 1;

// cloud.bin: "RSLF", u32 version, u64 N, f32 background, then N records of
// five f32 (X, Y, Z, sigma, intensity). Little-endian throughout.

inline std::vector<unsigned char> encode_cloud(const GaussianCloud& cloud) {
  std::vector<unsigned char> buf{'R', 'S', 'L', 'F'};
  put_le<std::uint32_t>(buf, kCloudVersion);
  put_le<std::uint64_t>(buf, cloud.size());
  put_le<float>(buf, static_cast<float>(cloud.background));
  for (const auto& g : cloud.gaussians) {
    put_le<float>(buf, static_cast<float>(g.center.x()));
    put_le<float>(buf, static_cast<float>(g.center.y()));
    put_le<float>(buf, static_cast<float>(g.center.z()));
    put_le<float>(buf, static_cast<float>(g.sigma));
    put_le<float>(buf, static_cast<float>(g.intensity));
  }
  return buf;
}

inline GaussianCloud decode_cloud(const std::vector<unsigned char>& buf, const std::string& name) {
  constexpr std::size_t kHeader = 4 + 4 + 8 + 4;
  if (buf.size() < kHeader || std::memcmp(buf.data(), "RSLF", 4) != 0)
    throw DataError(name + ": not an RSLF cloud file");
  const auto version = get_le<std::uint32_t>(buf.data() + 4);
  if (version != kCloudVersion)
    throw VersionError(name + ": unsupported cloud version " + std::to_string(version));
  const auto n = get_le<std::uint64_t>(buf.data() + 8);
  if (n > (buf.size() - kHeader) / 20 || buf.size() - kHeader != n * 20)
    throw DataError(name + ": record count does not match file size");
  GaussianCloud cloud;
  cloud.background = get_le<float>(buf.data() + 16);
  cloud.gaussians.resize(n);
  const unsigned char* p = buf.data() + kHeader;
  for (auto& g : cloud.gaussians) {
    g.center = {get_le<float>(p), get_le<float>(p + 4), get_le<float>(p + 8)};
    g.sigma = get_le<float>(p + 12);
    g.intensity = get_le<float>(p + 16);
    p += 20;
  }
  return cloud;
}

inline void write_cloud(const std::filesystem::path& path, const GaussianCloud& cloud) {
  const auto bytes = encode_cloud(cloud);
  write_file(path, bytes.data(), bytes.size());
}

inline GaussianCloud read_cloud(const std::filesystem::path& path) {
  return decode_cloud(read_file(path), path.string());
}

/// Human-readable mirror of cloud.bin.
inline Json cloud_to_json(const GaussianCloud& cloud) {
  Json g = Json::array();
  for (const auto& s : cloud.gaussians)
    g.push_back({s.center.x(), s.center.y(), s.center.z(), s.sigma, s.intensity});
  return {{"version", kCloudVersion},
          {"count", cloud.size()},
          {"background", cloud.background},
          {"fields", {"X", "Y", "Z", "sigma", "intensity"}},
          {"gaussians", g}};
}

}  // namespace rslf::io
