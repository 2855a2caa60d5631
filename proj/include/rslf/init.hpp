#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "rslf/error.hpp"
#include "rslf/geometry.hpp"
#include "rslf/image.hpp"
#include "rslf/lightfield.hpp"
#include "rslf/parallel.hpp"
#include "rslf/splat.hpp"

namespace rslf {

/// Central-view disparity with a validity mask.
struct DisparityMap {
  ImageD values;
  Mask valid;

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(valid.data().begin(), valid.data().end(), 1));
  }
};

struct PlaneSweepSettings {
  double d_min = -2.0;
  double d_max = 2.0;
  int steps = 64;
  int window = 7;
  /// Central-row views used for matching (odd; 0 = the whole row).
  int views = 0;
  /// Mean absolute difference above which the best match is rejected.
  double cost_max = 0.1;
  /// Minimum spread of the cost curve; flatter pixels are ambiguous.
  double flat_eps = 1e-6;

  double step() const { return (d_max - d_min) / (steps - 1); }
  double hypothesis(int k) const { return d_min + k * step(); }

  void validate() const {
    if (!(d_min < d_max))
      throw ArgumentError("plane sweep: degenerate disparity range [" + std::to_string(d_min) +
                          ", " + std::to_string(d_max) + "]");
    if (steps < 2) throw ArgumentError("plane sweep: steps must be >= 2");
    if (window < 1 || window % 2 == 0) throw ArgumentError("plane sweep: window must be odd");
  }
};

namespace detail {

/// Linear interpolation along a row; NaN outside [0, width-1].
inline double sample_row(const float* row, int w, double u) {
  if (!(u >= 0.0) || u > w - 1) return std::numeric_limits<double>::quiet_NaN();
  if (w == 1) return row[0];
  const int i = std::min(static_cast<int>(u), w - 2);
  const double t = u - i;
  return (1.0 - t) * row[i] + t * row[i + 1];
}

/// Mean of the finite entries of `cost` inside a window x window box;
/// NaN where none are finite.
inline ImageD box_mean(const ImageD& cost, int window) {
  const int W = cost.width(), H = cost.height(), r = window / 2;
  ImageD sum_h(W, H), cnt_h(W, H);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      double s = 0.0, n = 0.0;
      for (int k = std::max(0, u - r); k <= std::min(W - 1, u + r); ++k)
        if (std::isfinite(cost(k, v))) {
          s += cost(k, v);
          n += 1.0;
        }
      sum_h(u, v) = s;
      cnt_h(u, v) = n;
    }
  ImageD out(W, H);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      double s = 0.0, n = 0.0;
      for (int k = std::max(0, v - r); k <= std::min(H - 1, v + r); ++k) {
        s += sum_h(u, k);
        n += cnt_h(u, k);
      }
      out(u, v) = n > 0.0 ? s / n : std::numeric_limits<double>::quiet_NaN();
    }
  return out;
}

}  // namespace detail

/// Plane sweep over the central row of views. Each hypothesis shifts every
/// row view onto the central one by d * (x0 - x) and scores the mean
/// absolute difference, box-aggregated; the argmin is refined with a
/// parabola through its neighbours. Only views on the central row are read.
template <ViewSource Src>
DisparityMap estimate_disparity_central_row(const Src& lf, const PlaneSweepSettings& ps = {}) {
  ps.validate();
  const int A = lf.angular_size(), W = lf.width(), H = lf.height();
  const int c = (A - 1) / 2;
  const std::vector<ViewIndex> views = central_row_views(A, ps.views == 0 ? A : ps.views);
  const ImageView center = lf.view(c, c);
  std::vector<ImageView> others;
  std::vector<int> offsets;
  for (const ViewIndex& vi : views) {
    if (vi.x == c) continue;
    others.push_back(lf.view(vi.x, vi.y));
    offsets.push_back(c - vi.x);
  }

  std::vector<ImageD> volume(ps.steps);
  parallel_chunks(ps.steps, [&](int, int begin, int end) {
    for (int k = begin; k < end; ++k) {
      const double d = ps.hypothesis(k);
      ImageD cost(W, H, std::numeric_limits<double>::quiet_NaN());
      for (int v = 0; v < H; ++v)
        for (int u = 0; u < W; ++u) {
          double s = 0.0;
          int n = 0;
          for (std::size_t j = 0; j < others.size(); ++j) {
            const double x = detail::sample_row(others[j].row(v), W, u + d * offsets[j]);
            if (std::isnan(x)) continue;
            s += std::abs(x - center(u, v));
            ++n;
          }
          if (n > 0) cost(u, v) = s / n;
        }
      volume[k] = detail::box_mean(cost, ps.window);
    }
  });

  DisparityMap out{ImageD(W, H, 0.0), Mask(W, H, 0)};
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      int best = -1;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int k = 0; k < ps.steps; ++k) {
        const double x = volume[k](u, v);
        if (std::isnan(x)) continue;
        hi = std::max(hi, x);
        if (x < lo) {
          lo = x;
          best = k;
        }
      }
      if (best < 0 || hi - lo < ps.flat_eps || lo > ps.cost_max) continue;
      double offset = 0.0;
      if (best > 0 && best < ps.steps - 1) {
        const double cm = volume[best - 1](u, v), cp = volume[best + 1](u, v);
        const double curv = cm - 2.0 * lo + cp;
        if (std::isfinite(cm) && std::isfinite(cp) && curv > 0.0)
          offset = std::clamp(0.5 * (cm - cp) / curv, -0.5, 0.5);
      }
      out.values(u, v) = ps.hypothesis(best) + offset * ps.step();
      out.valid(u, v) = 1;
    }
  return out;
}

/// Sampling weights that favour high-frequency content: Gaussian-smoothed
/// gradient magnitude plus a uniform floor, normalised to sum to one.
inline ImageD frequency_density(const ImageView& img, double smooth_sigma = 1.5,
                                double floor_fraction = 0.05) {
  const int W = img.width(), H = img.height();
  ImageD grad(W, H);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      const double gx = 0.5 * (img(std::min(W - 1, u + 1), v) - img(std::max(0, u - 1), v));
      const double gy = 0.5 * (img(u, std::min(H - 1, v + 1)) - img(u, std::max(0, v - 1)));
      grad(u, v) = std::hypot(gx, gy);
    }
  const int r = static_cast<int>(std::ceil(3.0 * smooth_sigma));
  std::vector<double> kernel(2 * r + 1);
  for (int k = -r; k <= r; ++k)
    kernel[k + r] = std::exp(-0.5 * k * k / (smooth_sigma * smooth_sigma));
  auto convolve = [&](const ImageD& in, bool horizontal) {
    ImageD out(W, H);
    for (int v = 0; v < H; ++v)
      for (int u = 0; u < W; ++u) {
        double s = 0.0, n = 0.0;
        for (int k = -r; k <= r; ++k) {
          const int uu = horizontal ? u + k : u, vv = horizontal ? v : v + k;
          if (uu < 0 || uu >= W || vv < 0 || vv >= H) continue;
          s += kernel[k + r] * in(uu, vv);
          n += kernel[k + r];
        }
        out(u, v) = s / n;
      }
    return out;
  };
  ImageD dens = convolve(convolve(grad, true), false);
  const double mean = std::accumulate(dens.data().begin(), dens.data().end(), 0.0) / dens.size();
  const double floor = floor_fraction * mean + 1e-12;
  for (auto& x : dens.data()) x += floor;
  const double total = std::accumulate(dens.data().begin(), dens.data().end(), 0.0);
  for (auto& x : dens.data()) x /= total;
  return dens;
}

/// Fills invalid pixels with the disparity of the nearest valid pixel
/// (Euclidean; ties go to the smaller row, then column).
inline ImageD fill_nearest_valid(const DisparityMap& disp) {
  const int W = disp.values.width(), H = disp.values.height();
  std::vector<std::array<int, 2>> valid;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u)
      if (disp.valid(u, v)) valid.push_back({u, v});
  if (valid.empty()) throw DataError("disparity map has no valid pixel");
  ImageD out = disp.values;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      if (disp.valid(u, v)) continue;
      long best = std::numeric_limits<long>::max();
      std::array<int, 2> at{};
      for (const auto& p : valid) {
        const long du = p[0] - u, dv = p[1] - v, d2 = du * du + dv * dv;
        if (d2 < best) {  // row-major order makes the first hit the tie winner
          best = d2;
          at = p;
        }
      }
      out(u, v) = disp.values(at[0], at[1]);
    }
  return out;
}

/// Default seed count, 0.3 per pixel (4915 at 128 x 128). Sparser clouds
/// blur the texture the motion estimate depends on.
inline int default_gaussian_count(int width, int height) {
  return std::max(1, static_cast<int>(std::lround(0.3 * width * height)));
}

struct SeedSettings {
  std::uint64_t seed = 0;
  /// Physical disparity floor as a fraction of -beta / (Pf * w).
  double min_disparity_fraction = 0.95;
};

/// Seeds n Gaussians: the first at the density maximum, the rest sampled
/// without replacement in proportion to the density. Each takes its pixel's
/// intensity and disparity; sigma is half the mean distance to its four
/// nearest fellow seeds.
inline GaussianCloud seed_gaussians(const ImageView& central, const DisparityMap& disp, int n,
                                    const LFIntrinsics& intr, const SeedSettings& opt = {},
                                    const SplatSettings& s = {}) {
  if (n < 1) throw ArgumentError("seed_gaussians: n must be >= 1, got " + std::to_string(n));
  const int W = central.width(), H = central.height();
  if (disp.values.width() != W || disp.values.height() != H)
    throw ArgumentError("seed_gaussians: disparity map does not match the image");
  if (static_cast<long>(n) > static_cast<long>(W) * H)
    throw ArgumentError("seed_gaussians: more seeds than pixels");

  const bool restrict_valid = disp.valid_count() >= static_cast<std::size_t>(n);
  const ImageD dvals = restrict_valid ? disp.values : fill_nearest_valid(disp);
  const ImageD dens = frequency_density(central);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < dens.size(); ++i)
    if (!restrict_valid || disp.valid.data()[i]) candidates.push_back(i);

  std::size_t first = candidates[0];
  for (std::size_t i : candidates)
    if (dens.data()[i] > dens.data()[first]) first = i;

  // Weighted sampling without replacement: keep the n-1 largest log(u)/w.
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(candidates.size());
  for (std::size_t i : candidates) {
    const double u = unit(rng);
    if (i == first) continue;
    keys.push_back({std::log(std::max(u, 1e-300)) / dens.data()[i], i});
  }
  const std::size_t rest = static_cast<std::size_t>(n - 1);
  std::partial_sort(keys.begin(), keys.begin() + rest, keys.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<std::size_t> sites{first};
  for (std::size_t k = 0; k < rest; ++k) sites.push_back(keys[k].second);

  const double d_floor = -opt.min_disparity_fraction * intr.beta() / (intr.Pf * intr.w);
  GaussianCloud cloud;
  cloud.background = std::accumulate(central.data(), central.data() + central.size(), 0.0) /
                     static_cast<double>(central.size());
  cloud.gaussians.resize(sites.size());
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const int u = static_cast<int>(sites[k] % W), v = static_cast<int>(sites[k] / W);
    Gaussian2D& g = cloud.gaussians[k];
    g.center = disparity_to_point(u, v, std::max(dvals(u, v), d_floor), intr);
    g.intensity = std::clamp(static_cast<double>(central(u, v)), 0.0, 1.0);
  }

  const std::size_t m = sites.size();
  const std::size_t k_nn = std::min<std::size_t>(4, m - 1);
  for (std::size_t a = 0; a < m; ++a) {
    double sigma;
    if (k_nn == 0) {
      sigma = 0.5 * std::sqrt(static_cast<double>(W) * H);
    } else {
      std::array<double, 4> best;
      best.fill(std::numeric_limits<double>::infinity());
      const double ua = static_cast<double>(sites[a] % W), va = static_cast<double>(sites[a] / W);
      for (std::size_t b = 0; b < m; ++b) {
        if (b == a) continue;
        const double du = ua - static_cast<double>(sites[b] % W);
        const double dv = va - static_cast<double>(sites[b] / W);
        const double d2 = du * du + dv * dv;
        if (d2 < best[k_nn - 1]) {
          std::size_t j = k_nn - 1;
          while (j > 0 && best[j - 1] > d2) {
            best[j] = best[j - 1];
            --j;
          }
          best[j] = d2;
        }
      }
      double mean = 0.0;
      for (std::size_t j = 0; j < k_nn; ++j) mean += std::sqrt(best[j]) / k_nn;
      sigma = 0.5 * mean;
    }
    cloud.gaussians[a].sigma = std::clamp(sigma, s.sigma_min, s.sigma_max);
  }
  return cloud;
}

}  // namespace rslf
