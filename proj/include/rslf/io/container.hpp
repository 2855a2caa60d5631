#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "rslf/error.hpp"
#include "rslf/io/json_io.hpp"
#include "rslf/io/png.hpp"
#include "rslf/lightfield.hpp"

namespace rslf::io {

inline constexpr int kContainerSchemaVersion = 1;

/// meta.json of a light-field directory.
struct ContainerManifest {
  int schema_version = kContainerSchemaVersion;
  int angular = 0;
  int width = 0;
  int height = 0;
  int channels = 1;
  int bit_depth = 16;
  LFIntrinsics intr;
  RSTiming timing;
  std::optional<MotionParams> motion_gt;
  /// file name -> sha256 of its bytes
  std::map<std::string, std::string> hashes;
  /// free-form generator metadata (scene preset, motion index, ...)
  Json extra = Json::object();
};

inline std::string sai_filename(int x, int y) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sai_%02d_%02d.png", x, y);
  return buf;
}

inline Json to_json(const ContainerManifest& m) {
  Json j;
  j["schema_version"] = m.schema_version;
  j["A"] = m.angular;
  j["W"] = m.width;
  j["H"] = m.height;
  j["channels"] = m.channels;
  j["bit_depth"] = m.bit_depth;
  j["intrinsics"] = to_json(m.intr);
  j["row_period"] = m.timing.row_period;
  j["center_row"] = m.timing.center_row;
  j["readout_direction"] = "top_to_bottom";
  if (m.motion_gt) j["motion_gt"] = to_json(*m.motion_gt);
  j["hashes"] = m.hashes;
  j["extra"] = m.extra;
  return j;
}

inline ContainerManifest manifest_from_json(const Json& j, const std::string& where) {
  ContainerManifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kContainerSchemaVersion)
      throw VersionError(where + ": unsupported container schema version " +
                         std::to_string(m.schema_version));
    m.angular = j.at("A").get<int>();
    m.width = j.at("W").get<int>();
    m.height = j.at("H").get<int>();
    m.channels = j.at("channels").get<int>();
    m.bit_depth = j.value("bit_depth", 16);
    m.intr = intrinsics_from_json(j.at("intrinsics"));
    m.timing.row_period = j.at("row_period").get<double>();
    m.timing.center_row = j.value("center_row", m.intr.v0);
    if (j.value("readout_direction", std::string("top_to_bottom")) != "top_to_bottom")
      throw DataError(where + ": only top_to_bottom readout is supported");
    if (j.contains("motion_gt")) m.motion_gt = motion_from_json(j.at("motion_gt"));
    m.hashes = j.at("hashes").get<std::map<std::string, std::string>>();
    if (j.contains("extra")) m.extra = j.at("extra");
  } catch (const Json::exception& e) {
    throw DataError(where + ": malformed meta.json (" + e.what() + ")");
  }
  if (m.angular < 1 || m.angular % 2 == 0 || m.width < 1 || m.height < 1 ||
      (m.channels != 1 && m.channels != 3) || m.angular > 99 || m.width > 65536 ||
      m.height > 65536)
    throw DataError(where + ": invalid light-field dimensions");
  return m;
}

/// Writes the SAIs as 16-bit PNGs plus meta.json with per-file hashes.
inline ContainerManifest write_lightfield(const LightField4D& lf, const LFIntrinsics& intr,
                                          const RSTiming& timing,
                                          const std::filesystem::path& dir,
                                          std::optional<MotionParams> motion_gt = {},
                                          Json extra = Json::object()) {
  std::filesystem::create_directories(dir);
  ContainerManifest m;
  m.angular = lf.angular_size();
  m.width = lf.width();
  m.height = lf.height();
  m.channels = lf.channels();
  m.intr = intr;
  m.timing = timing;
  m.motion_gt = motion_gt;
  m.extra = std::move(extra);
  const std::size_t plane = static_cast<std::size_t>(lf.width()) * lf.height();
  for (int y = 0; y < lf.angular_size(); ++y)
    for (int x = 0; x < lf.angular_size(); ++x) {
      PngRaster r{lf.width(), lf.height(), m.channels, 16, {}};
      r.samples.resize(plane * m.channels);
      if (m.channels == 1) {
        const ImageView v = lf.view(x, y);
        for (std::size_t i = 0; i < plane; ++i) r.samples[i] = quantize16(v.row(0)[i]);
      } else {
        for (int c = 0; c < 3; ++c) {
          const ImageView v = lf.color_view(x, y, c);
          for (std::size_t i = 0; i < plane; ++i) r.samples[3 * i + c] = quantize16(v.row(0)[i]);
        }
      }
      const auto bytes = encode_png(r);
      const std::string name = sai_filename(x, y);
      write_file(dir / name, bytes.data(), bytes.size());
      m.hashes[name] = sha256_hex(bytes.data(), bytes.size());
    }
  write_file(dir / "meta.json", to_json(m).dump(2) + "\n");
  return m;
}

struct LoadedLightField {
  LightField4D lf;
  LFIntrinsics intr;
  RSTiming timing;
  ContainerManifest manifest;
};

inline ContainerManifest read_manifest(const std::filesystem::path& dir) {
  const auto meta = dir / "meta.json";
  if (!std::filesystem::exists(meta)) throw DataError("missing " + meta.string());
  const auto bytes = read_file(meta);
  Json j;
  try {
    j = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& e) {
    throw DataError(meta.string() + ": " + e.what());
  }
  return manifest_from_json(j, meta.string());
}

/// Loads a container, verifying every SAI against its recorded hash.
inline LoadedLightField read_lightfield(const std::filesystem::path& dir) {
  LoadedLightField out;
  out.manifest = read_manifest(dir);
  const ContainerManifest& m = out.manifest;
  out.intr = m.intr;
  out.timing = m.timing;
  out.lf = LightField4D(m.angular, m.width, m.height);
  std::vector<float> rgb;
  const std::size_t plane = static_cast<std::size_t>(m.width) * m.height;
  if (m.channels == 3) rgb.resize(out.lf.data().size() * 3);
  for (int y = 0; y < m.angular; ++y)
    for (int x = 0; x < m.angular; ++x) {
      const std::string name = sai_filename(x, y);
      const auto path = dir / name;
      if (!std::filesystem::exists(path)) throw DataError("missing " + path.string());
      const auto bytes = read_file(path);
      const auto it = m.hashes.find(name);
      if (it == m.hashes.end()) throw CorruptionError(path.string() + ": no recorded hash");
      if (sha256_hex(bytes.data(), bytes.size()) != it->second)
        throw CorruptionError(path.string() + ": content hash mismatch");
      const PngRaster r = decode_png(bytes, path.string());
      if (r.width != m.width || r.height != m.height || r.channels != m.channels)
        throw DataError(path.string() + ": SAI size or channels disagree with meta.json");
      const float scale = r.bit_depth == 16 ? 65535.0f : 255.0f;
      if (m.channels == 1) {
        float* dst = out.lf.mutable_view(x, y);
        for (std::size_t i = 0; i < plane; ++i) dst[i] = r.samples[i] / scale;
      } else {
        const std::size_t base = (static_cast<std::size_t>(y) * m.angular + x) * plane * 3;
        for (int c = 0; c < 3; ++c)
          for (std::size_t i = 0; i < plane; ++i)
            rgb[base + c * plane + i] = r.samples[3 * i + c] / scale;
      }
    }
  if (m.channels == 3) out.lf.set_color(std::move(rgb));
  return out;
}

/// Digest identifying a dataset: sha256 of its meta.json, which itself
/// carries the hash of every SAI.
inline std::string dataset_hash(const std::filesystem::path& dir) {
  return sha256_file(dir / "meta.json");
}

}  // namespace rslf::io
