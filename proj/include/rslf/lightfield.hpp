#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rslf/error.hpp"
#include "rslf/image.hpp"

namespace rslf {

/// Light-field intrinsics. f, u0, v0 are in pixels; w, F, b in millimetres;
/// Pf in scene units. beta = b * F * max(2 u0, 2 v0).
struct LFIntrinsics {
  double f = 160.0;
  double u0 = 63.5;
  double v0 = 63.5;
  double w = 6.4;
  double F = 8.0;
  double b = 0.0063;
  double Pf = 1.0;

  double beta() const noexcept { return b * F * std::max(2.0 * u0, 2.0 * v0); }

  /// Scene-space distance between adjacent view centres for which one unit
  /// of normalized disparity is a one-pixel shift per view step.
  double view_baseline() const noexcept { return beta() / (w * f); }

  void validate(int width) const {
    for (auto [name, val] : {std::pair{"f", f}, {"w", w}, {"F", F}, {"b", b},
                             {"Pf", Pf}, {"beta", beta()}}) {
      if (!(val > 0.0) || !std::isfinite(val))
        throw ArgumentError(std::string("LFIntrinsics: ") + name +
                            " must be strictly positive");
    }
    // pixel size = w / W, f = F / pixel size
    const double lhs = f * w;
    const double rhs = F * width;
    if (std::abs(lhs - rhs) > 1e-6 * std::max(std::abs(lhs), std::abs(rhs)))
      throw ArgumentError("LFIntrinsics: f*w must equal F*W (got " +
                          std::to_string(lhs) + " vs " + std::to_string(rhs) +
                          ")");
  }

  /// Intrinsics for a canvas enlarged by pad_u columns and pad_v rows on
  /// each side, principal point recentred. f and F are kept, so the sensor
  /// width grows with the canvas; b is rescaled so beta / w (and hence the
  /// disparity-depth relation) is unchanged.
  LFIntrinsics padded(double pad_u, double pad_v, int width) const {
    LFIntrinsics out = *this;
    out.u0 = u0 + pad_u;
    out.v0 = v0 + pad_v;
    out.w = w * (width + 2.0 * pad_u) / width;
    out.b = beta() * (out.w / w) / (F * std::max(2.0 * out.u0, 2.0 * out.v0));
    return out;
  }

  bool operator==(const LFIntrinsics&) const = default;
};

enum class ReadoutDirection { TopToBottom };

/// Rolling-shutter row timing. Time is normalized so that one full-frame
/// readout lasts 1.0; tau = 0 when the centre row is read.
struct RSTiming {
  double row_period = 1.0 / 128.0;
  double center_row = 63.5;
  ReadoutDirection direction = ReadoutDirection::TopToBottom;

  static RSTiming for_height(int height, double v0) {
    return RSTiming{1.0 / height, v0, ReadoutDirection::TopToBottom};
  }

  bool operator==(const RSTiming&) const = default;
};

/// Signed readout time of pixel row v. Identical for every SAI: the time of
/// a pixel depends on v only.
inline double row_time(double v, const RSTiming& timing) noexcept {
  return (v - timing.center_row) * timing.row_period;
}

struct ViewIndex {
  int x = 0;
  int y = 0;
  auto operator<=>(const ViewIndex&) const = default;
};

/// 4D light field (x, y, u, v) of an A x A grid of H x W grayscale SAIs.
/// Colour inputs keep their RGB planes alongside the channel-mean tensor
/// used for optimization.
class LightField4D {
 public:
  LightField4D() = default;
  LightField4D(int angular, int width, int height, float fill = 0.0f)
      : angular_(angular), width_(width), height_(height) {
    if (angular < 1 || angular % 2 == 0)
      throw ArgumentError("LightField4D: angular size A must be odd, got " +
                          std::to_string(angular));
    if (width < 1 || height < 1)
      throw ArgumentError("LightField4D: empty pixel grid");
    data_.assign(static_cast<std::size_t>(angular) * angular * width * height,
                 fill);
  }

  int angular_size() const noexcept { return angular_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int center() const noexcept { return (angular_ - 1) / 2; }
  int channels() const noexcept { return color_.empty() ? 1 : 3; }

  ImageView view(int x, int y) const {
    check_view(x, y);
    return {data_.data() + offset(x, y), width_, height_};
  }

  float* mutable_view(int x, int y) {
    check_view(x, y);
    return data_.data() + offset(x, y);
  }

  void set_view(int x, int y, const ImageF& img) {
    check_view(x, y);
    if (img.width() != width_ || img.height() != height_)
      throw ArgumentError("set_view: image size mismatch");
    std::copy(img.data().begin(), img.data().end(), data_.begin() + offset(x, y));
  }

  /// Attach RGB planes (3 images per view, view-major). The grayscale tensor
  /// is overwritten with the channel mean.
  void set_color(std::vector<float> rgb) {
    if (rgb.size() != data_.size() * 3)
      throw ArgumentError("set_color: expected 3 planes per SAI");
    color_ = std::move(rgb);
    const std::size_t plane = static_cast<std::size_t>(width_) * height_;
    for (std::size_t s = 0; s < data_.size() / plane; ++s)
      for (std::size_t p = 0; p < plane; ++p) {
        const float* c = color_.data() + s * plane * 3;
        data_[s * plane + p] = (c[p] + c[plane + p] + c[2 * plane + p]) / 3.0f;
      }
  }

  /// RGB plane `c` of view (x, y); requires channels() == 3.
  ImageView color_view(int x, int y, int c) const {
    check_view(x, y);
    if (color_.empty()) throw ArgumentError("color_view: grayscale light field");
    return {color_.data() + offset(x, y) * 3 +
                static_cast<std::size_t>(c) * width_ * height_,
            width_, height_};
  }

  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }
  const std::vector<float>& color_data() const noexcept { return color_; }

  void validate() const {
    auto ok = [](float f) { return std::isfinite(f) && f >= 0.0f && f <= 1.0f; };
    if (!std::all_of(data_.begin(), data_.end(), ok) ||
        !std::all_of(color_.begin(), color_.end(), ok))
      throw DataError("LightField4D: intensities must be finite and in [0,1]");
  }

  bool operator==(const LightField4D&) const = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * angular_ + x) *
           static_cast<std::size_t>(width_) * height_;
  }
  void check_view(int x, int y) const {
    if (x < 0 || x >= angular_)
      throw BoundsError("view axis x=" + std::to_string(x) + " outside [0," +
                        std::to_string(angular_) + ")");
    if (y < 0 || y >= angular_)
      throw BoundsError("view axis y=" + std::to_string(y) + " outside [0," +
                        std::to_string(angular_) + ")");
  }

  int angular_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
  std::vector<float> color_;
};

/// Anything that hands out SAIs by view index. The pipeline only ever reads
/// the light field through this surface, so access can be audited.
template <typename S>
concept ViewSource = requires(const S& s, int x, int y) {
  { s.view(x, y) } -> std::convertible_to<ImageView>;
  { s.angular_size() } -> std::convertible_to<int>;
  { s.width() } -> std::convertible_to<int>;
  { s.height() } -> std::convertible_to<int>;
};

inline ImageView sai_view(const LightField4D& lf, int x, int y) {
  return lf.view(x, y);
}

/// Records every view index requested from the wrapped source.
template <ViewSource Src>
class AccessLog {
 public:
  explicit AccessLog(const Src& src) : src_(&src) {}

  ImageView view(int x, int y) const {
    {
      std::lock_guard lock(mu_);
      seen_.insert({x, y});
    }
    return src_->view(x, y);
  }
  int angular_size() const { return src_->angular_size(); }
  int width() const { return src_->width(); }
  int height() const { return src_->height(); }

  std::set<ViewIndex> accessed() const {
    std::lock_guard lock(mu_);
    return seen_;
  }
  void clear() {
    std::lock_guard lock(mu_);
    seen_.clear();
  }

 private:
  const Src* src_;
  mutable std::mutex mu_;
  mutable std::set<ViewIndex> seen_;
};

/// `count` views on the central row, symmetric about the centre and spread
/// as far as possible.
inline std::vector<ViewIndex> central_row_views(int angular, int count) {
  if (count < 1 || count % 2 == 0)
    throw ArgumentError("central_row_views: count must be odd, got " +
                        std::to_string(count));
  if (count > angular)
    throw ArgumentError("central_row_views: count " + std::to_string(count) +
                        " exceeds angular size " + std::to_string(angular));
  const int c = (angular - 1) / 2;
  const int half = (count - 1) / 2;
  std::vector<ViewIndex> out;
  out.reserve(count);
  for (int k = -half; k <= half; ++k) {
    const int off =
        half == 0 ? 0
                  : static_cast<int>(std::lround(static_cast<double>(std::abs(k)) *
                                                 c / half));
    out.push_back({c + (k < 0 ? -off : off), c});
  }
  return out;
}

inline std::vector<ViewIndex> corner_views(int angular) {
  if (angular < 3)
    throw ArgumentError("corner_views: angular size must be >= 3, got " +
                        std::to_string(angular));
  const int e = angular - 1;
  return {{0, 0}, {e, 0}, {0, e}, {e, e}};
}

}  // namespace rslf
