#pragma once

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "rslf/error.hpp"
#include "rslf/image.hpp"
#include "rslf/io/bytes.hpp"

namespace rslf::io {

// Single-channel PFM ("Pf"). Scanlines are stored bottom to top; a negative
// scale marks little-endian samples.

inline std::vector<unsigned char> encode_pfm(const ImageF& img) {
  const std::string header =
      "Pf\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n-1.0\n";
  std::vector<unsigned char> buf(header.begin(), header.end());
  buf.reserve(buf.size() + img.size() * 4);
  for (int v = img.height() - 1; v >= 0; --v)
    for (float f : img.row(v)) put_le(buf, f);
  return buf;
}

inline ImageF decode_pfm(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && t.size() < 32)
      t.push_back(static_cast<char>(bytes[pos++]));
    if (t.empty()) throw DataError(name + ": malformed PFM header");
    return t;
  };
  const std::string magic = token();
  if (magic != "Pf") throw DataError(name + ": unsupported PFM type '" + magic + "'");
  long long w = 0, h = 0;
  double scale = 0.0;
  try {
    std::size_t used = 0;
    const std::string tw = token(), th = token(), ts = token();
    w = std::stoll(tw, &used);
    if (used != tw.size()) throw std::invalid_argument("w");
    h = std::stoll(th, &used);
    if (used != th.size()) throw std::invalid_argument("h");
    scale = std::stod(ts, &used);
    if (used != ts.size()) throw std::invalid_argument("scale");
  } catch (const std::logic_error&) {
    throw DataError(name + ": malformed PFM header");
  }
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20) || scale == 0.0 || !std::isfinite(scale))
    throw DataError(name + ": invalid PFM dimensions or scale");
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    throw DataError(name + ": malformed PFM header");
  ++pos;  // single whitespace byte ends the header
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 4;
  if (bytes.size() - pos < need) throw DataError(name + ": truncated PFM data");

  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  ImageF out(static_cast<int>(w), static_cast<int>(h));
  const unsigned char* p = bytes.data() + pos;
  for (int v = out.height() - 1; v >= 0; --v)
    for (int u = 0; u < out.width(); ++u) {
      unsigned char b[4];
      std::memcpy(b, p, 4);
      if (swap) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
      std::memcpy(&out(u, v), b, 4);
      p += 4;
    }
  return out;
}

inline void write_pfm(const std::filesystem::path& path, const ImageF& img) {
  const auto bytes = encode_pfm(img);
  write_file(path, bytes.data(), bytes.size());
}

inline void write_pfm(const std::filesystem::path& path, const ImageD& img) {
  ImageF f(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) f.data()[i] = static_cast<float>(img.data()[i]);
  write_pfm(path, f);
}

inline ImageF read_pfm(const std::filesystem::path& path) {
  return decode_pfm(read_file(path), path.string());
}

}  // namespace rslf::io
