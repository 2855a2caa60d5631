#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rslf/error.hpp"

namespace rslf {

/// Row-major 2D raster. Pixel (u, v) is column u, row v; its center sits at
/// integer coordinates.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ArgumentError("Image: negative size");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }

  T& at(int u, int v) {
    check(u, v);
    return (*this)(u, v);
  }
  const T& at(int u, int v) const {
    check(u, v);
    return (*this)(u, v);
  }

  std::span<T> row(int v) {
    return {data_.data() + static_cast<std::size_t>(v) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int v) const {
    return {data_.data() + static_cast<std::size_t>(v) * width_,
            static_cast<std::size_t>(width_)};
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * width_ + u;
  }
  void check(int u, int v) const {
    if (u < 0 || u >= width_)
      throw BoundsError("pixel column u=" + std::to_string(u) + " outside [0," +
                        std::to_string(width_) + ")");
    if (v < 0 || v >= height_)
      throw BoundsError("pixel row v=" + std::to_string(v) + " outside [0," +
                        std::to_string(height_) + ")");
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageF = Image<float>;
using ImageD = Image<double>;
using Mask = Image<unsigned char>;

/// Read-only window onto a float raster owned elsewhere.
class ImageView {
 public:
  ImageView() = default;
  ImageView(const float* data, int width, int height)
      : data_(data), width_(width), height_(height) {}
  ImageView(const ImageF& img)  // NOLINT(google-explicit-constructor)
      : data_(img.data().data()), width_(img.width()), height_(img.height()) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  const float* data() const noexcept { return data_; }
  float operator()(int u, int v) const noexcept {
    return data_[static_cast<std::size_t>(v) * width_ + u];
  }
  const float* row(int v) const noexcept {
    return data_ + static_cast<std::size_t>(v) * width_;
  }

  ImageF copy() const {
    ImageF out(width_, height_);
    std::copy(data_, data_ + static_cast<std::size_t>(width_) * height_,
              out.data().begin());
    return out;
  }

 private:
  const float* data_ = nullptr;
  int width_ = 0;
  int height_ = 0;
};

}  // namespace rslf
