#pragma once

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "rslf/error.hpp"
#include "rslf/image.hpp"
#include "rslf/io/bytes.hpp"

namespace rslf::io {

/// Decoded PNG samples: channels 1 (gray) or 3 (RGB), interleaved, at the
/// file's bit depth (8 or 16).
struct PngRaster {
  int width = 0;
  int height = 0;
  int channels = 1;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

namespace detail {

struct PngReadSource {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
  char message[256];
};

inline void png_error_to_jmp(png_structp png, png_const_charp msg) {
  auto* src = static_cast<PngReadSource*>(png_get_error_ptr(png));
  std::snprintf(src->message, sizeof(src->message), "%s", msg);
  png_longjmp(png, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

inline void png_read_mem(png_structp png, png_bytep out, png_size_t n) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->pos + n > src->size) png_error(png, "truncated PNG data");
  std::memcpy(out, src->data + src->pos, n);
  src->pos += n;
}

inline void png_write_mem(png_structp png, png_bytep data, png_size_t n) {
  auto* buf = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  buf->insert(buf->end(), data, data + n);
}

inline void png_flush_noop(png_structp) {}

}  // namespace detail

inline PngRaster decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw DataError(name + ": not a PNG file");
  detail::PngReadSource src{bytes.data(), bytes.size(), 0, {0}};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &src,
                                           detail::png_error_to_jmp, detail::png_warning_ignore);
  if (!png) throw DataError(name + ": png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngRaster out;
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(name + ": " + src.message);
  }
  png_set_read_fn(png, &src, detail::png_read_mem);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int ctype = png_get_color_type(png, info);
  if (ctype == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (ctype == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (ctype & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int channels = png_get_channels(png, info);
  const int bd = png_get_bit_depth(png, info);
  if ((channels != 1 && channels != 3) || (bd != 8 && bd != 16))
    png_error(png, "unsupported PNG layout");
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = pixels.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.channels = channels;
  out.bit_depth = bd;
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = bd == 16 ? static_cast<std::uint16_t>((pixels[2 * i] << 8) | pixels[2 * i + 1])
                              : pixels[i];
  return out;
}

inline PngRaster read_png(const std::filesystem::path& path) {
  return decode_png(read_file(path), path.string());
}

inline std::vector<unsigned char> encode_png(const PngRaster& img) {
  std::vector<unsigned char> buf;
  detail::PngReadSource err{nullptr, 0, 0, {0}};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            detail::png_error_to_jmp, detail::png_warning_ignore);
  if (!png) throw DataError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  const int bpp = img.bit_depth / 8;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(img.width) * img.height *
                                    img.channels * bpp);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (bpp == 2) {
      pixels[2 * i] = static_cast<unsigned char>(img.samples[i] >> 8);
      pixels[2 * i + 1] = static_cast<unsigned char>(img.samples[i] & 0xff);
    } else {
      pixels[i] = static_cast<unsigned char>(img.samples[i]);
    }
  }
  std::vector<png_bytep> rows(img.height);
  const std::size_t rowbytes = static_cast<std::size_t>(img.width) * img.channels * bpp;
  for (int r = 0; r < img.height; ++r) rows[r] = pixels.data() + r * rowbytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError(std::string("PNG encode: ") + err.message);
  }
  png_set_write_fn(png, &buf, detail::png_write_mem, detail::png_flush_noop);
  png_set_IHDR(png, info, img.width, img.height, img.bit_depth,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return buf;
}

inline void write_png(const std::filesystem::path& path, const PngRaster& img) {
  const auto bytes = encode_png(img);
  write_file(path, bytes.data(), bytes.size());
}

inline std::uint16_t quantize16(double x) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(x, 0.0, 1.0) * 65535.0));
}

/// Gray intensities in [0,1] as a 16-bit PNG.
template <typename T>
void write_gray16(const std::filesystem::path& path, const Image<T>& img) {
  PngRaster r{img.width(), img.height(), 1, 16, {}};
  r.samples.reserve(img.size());
  for (T v : img.data()) r.samples.push_back(quantize16(static_cast<double>(v)));
  write_png(path, r);
}

/// Loads an 8- or 16-bit PNG as gray floats in [0,1]; RGB is averaged.
inline ImageF read_gray(const std::filesystem::path& path) {
  const PngRaster r = read_png(path);
  const float scale = r.bit_depth == 16 ? 65535.0f : 255.0f;
  ImageF out(r.width, r.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (r.channels == 1) {
      out.data()[i] = r.samples[i] / scale;
    } else {
      out.data()[i] =
          (r.samples[3 * i] / scale + r.samples[3 * i + 1] / scale + r.samples[3 * i + 2] / scale) /
          3.0f;
    }
  }
  return out;
}

/// Visibility mask as an 8-bit PNG, 255 = visible.
inline void write_mask(const std::filesystem::path& path, const Mask& mask) {
  PngRaster r{mask.width(), mask.height(), 1, 8, {}};
  for (unsigned char m : mask.data()) r.samples.push_back(m ? 255 : 0);
  write_png(path, r);
}

inline Mask read_mask(const std::filesystem::path& path) {
  const PngRaster r = read_png(path);
  if (r.channels != 1) throw DataError(path.string() + ": mask must be single channel");
  const unsigned half = r.bit_depth == 16 ? 32768 : 128;
  Mask out(r.width, r.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = r.samples[i] >= half ? 1 : 0;
  return out;
}

}  // namespace rslf::io
