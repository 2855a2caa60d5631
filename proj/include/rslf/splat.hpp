#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rslf/error.hpp"
#include "rslf/geometry.hpp"
#include "rslf/image.hpp"
#include "rslf/lightfield.hpp"
#include "rslf/parallel.hpp"

namespace rslf {

/// One splat: 3D centre, isotropic image-space radius in pixels, scalar
/// intensity. Five degrees of freedom.
struct Gaussian2D {
  Point3 center = Point3::Zero();
  double sigma = 1.0;
  double intensity = 0.0;

  bool operator==(const Gaussian2D& o) const {
    return center == o.center && sigma == o.sigma && intensity == o.intensity;
  }
};

struct SplatSettings {
  double alpha_cap = 0.99;
  double alpha_cull = 1.0 / 255.0;
  double sigma_min = 0.5;
  double sigma_max = 32.0;
  int tile_width = 16;

  /// Ratio g_c = alpha_cull / alpha_cap of the Gaussian profile at which the
  /// opacity reaches zero.
  double profile_cut() const { return alpha_cull / alpha_cap; }
  /// Normalization A of the opacity profile, a(1) = alpha_cap.
  double profile_scale() const {
    const double gc = profile_cut();
    return alpha_cap / (1.0 - gc + gc * std::log(gc));
  }
  /// Support radius in units of sigma.
  double support_sigmas() const { return std::sqrt(2.0 * std::log(alpha_cap / alpha_cull)); }
};

struct GaussianCloud {
  std::vector<Gaussian2D> gaussians;
  double background = 0.0;
  /// Optional per-Gaussian RGB, filled after grayscale optimization.
  std::vector<std::array<double, 3>> rgb;

  std::size_t size() const noexcept { return gaussians.size(); }

  void validate(const SplatSettings& s = {}) const {
    if (gaussians.empty()) throw ArgumentError("GaussianCloud: empty cloud");
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
      const auto& g = gaussians[i];
      if (!g.center.allFinite() || !std::isfinite(g.sigma) ||
          !std::isfinite(g.intensity))
        throw NumericalError("GaussianCloud: non-finite Gaussian " + std::to_string(i));
      if (g.sigma < s.sigma_min || g.sigma > s.sigma_max)
        throw ArgumentError("GaussianCloud: sigma of Gaussian " + std::to_string(i) +
                            " outside [sigma_min, sigma_max]");
      if (g.intensity < 0.0 || g.intensity > 1.0)
        throw ArgumentError("GaussianCloud: intensity of Gaussian " + std::to_string(i) +
                            " outside [0,1]");
    }
  }

  bool operator==(const GaussianCloud&) const = default;
};

/// Opacity of a splat at squared pixel distance r2, from the Gaussian
/// profile g: a(g) = A (g - g_c - g_c ln(g / g_c)), which peaks at
/// alpha_cap and meets zero with zero slope on the alpha_cull contour, so
/// the rendered image is C1 in every splat parameter. Beyond the contour
/// the splat contributes nothing.
inline double splat_alpha(double r2, double sigma, const SplatSettings& s) {
  const double gc = s.profile_cut();
  const double e = -0.5 * r2 / (sigma * sigma);
  const double g = std::exp(e);
  if (g <= gc) return 0.0;
  return s.profile_scale() * (g - gc - gc * (e - std::log(gc)));
}

/// Half-open row range [begin, end).
struct Band {
  int begin = 0;
  int end = 0;
  int rows() const noexcept { return end - begin; }
  bool operator==(const Band&) const = default;
};

/// Bands of band_height rows covering [0, height); the last may be shorter.
inline std::vector<Band> make_bands(int height, int band_height) {
  if (band_height < 1) throw ArgumentError("make_bands: band height must be >= 1");
  std::vector<Band> out;
  for (int v = 0; v < height; v += band_height)
    out.push_back({v, std::min(height, v + band_height)});
  return out;
}

/// Shared acquisition time of a band: the readout time of its centre row.
inline double band_time(const Band& band, const RSTiming& timing) {
  return row_time(0.5 * (band.begin + band.end - 1), timing);
}

/// When a Gaussian is re-imaged in a band. Band: at the band's centre-row
/// time, so a splat taller than the band is sheared by the motion. Center:
/// at the readout time of the row its centre lands on in the rendered view,
/// which keeps each splat rigid and makes the result independent of the
/// band layout.
enum class ReimageTime { Band, Center };

/// Rolling-shutter context for band rendering: the motion hypothesis, the
/// row timing and each Gaussian's central observation time.
struct RSMotion {
  MotionParams motion;
  RSTiming timing;
  std::span<const double> tau;
  ReimageTime reimage = ReimageTime::Band;
};

/// Observation time of each Gaussian: readout time of its projected row in
/// the central view.
inline std::vector<double> observation_times(const GaussianCloud& cloud,
                                             const LFIntrinsics& intr,
                                             const RSTiming& timing) {
  std::vector<double> tau(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    tau[i] = row_time(point_to_disparity(cloud.gaussians[i].center, intr).v, timing);
  return tau;
}

/// Pixel position of a Gaussian centre in view `view`: the central-view
/// position shifted by disparity times the view offset.
inline std::array<double, 2> project_to_view(const Gaussian2D& g, ViewIndex view,
                                             int angular, const LFIntrinsics& intr) {
  const int c = (angular - 1) / 2;
  const PixelDisparity p = point_to_disparity(g.center, intr);
  return {p.u + p.d * (c - view.x), p.v + p.d * (c - view.y)};
}

/// A splat in view pixel coordinates, ready for compositing.
struct ProjectedSplat {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
  double sigma = 1.0;
  double intensity = 0.0;
  int index = 0;
};

struct RenderedBand {
  Band band;
  int width = 0;
  ImageD intensity;
  /// Disparity composited with the blending weights (not divided by alpha).
  ImageD disparity;
  ImageD alpha_acc;
};

/// Forward-pass record used by backward_band.
struct BandCache {
  ViewIndex view;
  Band band;
  std::size_t cloud_size = 0;
  bool has_motion = false;
  std::vector<ProjectedSplat> splats;
  /// d(u', v') / d(centre), d(u', v') / d(omega), d(u', v') / d(vel).
  std::vector<Eigen::Matrix<double, 2, 3>> jac_center;
  std::vector<Eigen::Matrix<double, 2, 3>> jac_omega;
  std::vector<Eigen::Matrix<double, 2, 3>> jac_vel;
};

struct BandGradients {
  std::vector<Vec3> center;
  std::vector<double> sigma;
  std::vector<double> intensity;
  Vec3 omega = Vec3::Zero();
  Vec3 vel = Vec3::Zero();

  explicit BandGradients(std::size_t n = 0)
      : center(n, Vec3::Zero()), sigma(n, 0.0), intensity(n, 0.0) {}

  BandGradients& operator+=(const BandGradients& o) {
    for (std::size_t i = 0; i < center.size(); ++i) {
      center[i] += o.center[i];
      sigma[i] += o.sigma[i];
      intensity[i] += o.intensity[i];
    }
    omega += o.omega;
    vel += o.vel;
    return *this;
  }

  bool all_zero() const {
    auto z = [](double x) { return x == 0.0; };
    return std::all_of(sigma.begin(), sigma.end(), z) &&
           std::all_of(intensity.begin(), intensity.end(), z) &&
           std::all_of(center.begin(), center.end(),
                       [](const Vec3& v) { return v.isZero(0.0); }) &&
           omega.isZero(0.0) && vel.isZero(0.0);
  }
};

namespace detail {

inline bool splat_before(const ProjectedSplat& a, const ProjectedSplat& b) {
  if (a.d != b.d) return a.d > b.d;
  return a.index < b.index;
}

/// Per column tile, positions (into the sorted splat list) of every splat
/// whose support reaches the tile; each list stays in depth order.
struct TileBins {
  int tile_width = 16;
  std::vector<std::vector<int>> tiles;
};

inline TileBins bin_splats(std::span<const ProjectedSplat> splats, int width,
                           const SplatSettings& s) {
  TileBins bins;
  bins.tile_width = std::max(1, s.tile_width);
  const int ntiles = (width + bins.tile_width - 1) / bins.tile_width;
  bins.tiles.resize(ntiles);
  const double k = s.support_sigmas();
  for (int j = 0; j < static_cast<int>(splats.size()); ++j) {
    const double r = k * splats[j].sigma;
    const int c0 = std::max(0, static_cast<int>(std::floor(splats[j].u - r)));
    const int c1 = std::min(width - 1, static_cast<int>(std::ceil(splats[j].u + r)));
    if (c0 > c1) continue;
    for (int t = c0 / bins.tile_width; t <= c1 / bins.tile_width; ++t)
      bins.tiles[t].push_back(j);
  }
  return bins;
}

inline bool in_support(const ProjectedSplat& sp, double pu, double pv, double k) {
  const double r = k * sp.sigma * (1.0 + 1e-9);
  const double du = pu - sp.u;
  const double dv = pv - sp.v;
  return du * du + dv * dv <= r * r;
}

}  // namespace detail

/// Projects every Gaussian into `view` for the rows of `band`, applying the
/// rolling-shutter motion map when `motion` is given, drops splats with no
/// support in the band, and returns the rest sorted nearest first. The order
/// key is the disparity of the stored centre (ties by index): the motion map
/// moves splats but never reorders them, so the band is continuous in the
/// motion parameters.
inline std::vector<ProjectedSplat> project_band(const GaussianCloud& cloud, ViewIndex view,
                                                int angular, Band band, int width,
                                                const RSMotion* motion,
                                                const LFIntrinsics& intr,
                                                const SplatSettings& s = {},
                                                BandCache* cache = nullptr) {
  const int c = (angular - 1) / 2;
  const double sx = c - view.x;
  const double sy = c - view.y;
  const double k = s.support_sigmas();
  const double tau_l = motion ? band_time(band, motion->timing) : 0.0;
  if (motion && motion->tau.size() != cloud.size())
    throw ArgumentError("project_band: one observation time per Gaussian required");

  struct Kept {
    ProjectedSplat sp;
    double key;
    Eigen::Matrix<double, 2, 3> jc, jo, jv;
  };
  std::vector<Kept> kept;
  kept.reserve(cloud.size() / 2);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Gaussian2D& g = cloud.gaussians[i];
    Point3 P = g.center;
    MotionMap mm;
    double t_i = tau_l;
    PixelDisparity p0;
    if (motion && motion->reimage == ReimageTime::Center) {
      p0 = point_to_disparity(g.center, intr);
      t_i = row_time(p0.v + p0.d * sy, motion->timing);
    }
    if (motion) {
      mm = motion_map(g.center, motion->tau[i], t_i, motion->motion);
      P = mm.P_lambda;
    }
    if (!(P.z() > 0.0)) continue;
    const PixelDisparity pd = point_to_disparity(P, intr);
    const double u = pd.u + pd.d * sx;
    const double v = pd.v + pd.d * sy;
    const double r = k * g.sigma;
    if (v + r < band.begin || v - r > band.end - 1) continue;
    if (u + r < 0.0 || u - r > width - 1) continue;
    Kept kp;
    kp.sp = {u, v, pd.d, g.sigma, g.intensity, static_cast<int>(i)};
    kp.key = motion ? point_to_disparity(g.center, intr).d : pd.d;
    if (cache) {
      const Mat3 J = point_to_disparity_jacobian(P, intr);
      Eigen::Matrix<double, 2, 3> Juv;
      Juv.row(0) = J.row(0) + sx * J.row(2);
      Juv.row(1) = J.row(1) + sy * J.row(2);
      if (motion && motion->reimage == ReimageTime::Center) {
        // the re-imaging time follows the centre's row in this view
        const Mat3 J0 = point_to_disparity_jacobian(g.center, intr);
        const Eigen::RowVector3d dt = motion->timing.row_period * (J0.row(1) + sy * J0.row(2));
        const Vec3 rotated = mm.P_lambda - t_i * motion->motion.vel;
        const Vec3 dPdt =
            rotate_jacobian(t_i * motion->motion.omega, rotated) * motion->motion.omega +
            motion->motion.vel;
        kp.jc = Juv * (mm.dP + dPdt * dt);
        kp.jo = Juv * mm.domega;
        kp.jv = Juv * mm.dvel;
      } else if (motion) {
        kp.jc = Juv * mm.dP;
        kp.jo = Juv * mm.domega;
        kp.jv = Juv * mm.dvel;
      } else {
        kp.jc = Juv;
        kp.jo.setZero();
        kp.jv.setZero();
      }
    }
    kept.push_back(kp);
  }
  std::sort(kept.begin(), kept.end(), [](const Kept& a, const Kept& b) {
    if (a.key != b.key) return a.key > b.key;
    return a.sp.index < b.sp.index;
  });

  std::vector<ProjectedSplat> out;
  out.reserve(kept.size());
  for (const auto& kp : kept) out.push_back(kp.sp);
  if (cache) {
    cache->view = view;
    cache->band = band;
    cache->cloud_size = cloud.size();
    cache->has_motion = motion != nullptr;
    cache->splats = out;
    cache->jac_center.clear();
    cache->jac_omega.clear();
    cache->jac_vel.clear();
    for (const auto& kp : kept) {
      cache->jac_center.push_back(kp.jc);
      cache->jac_omega.push_back(kp.jo);
      cache->jac_vel.push_back(kp.jv);
    }
  }
  return out;
}

/// Front-to-back alpha compositing of depth-sorted splats over the rows of
/// `band`, pixel centres at integer coordinates.
inline RenderedBand composite_band(std::span<const ProjectedSplat> sorted, Band band, int width,
                                   double background, const SplatSettings& s = {}) {
  if (band.rows() <= 0 || width <= 0) throw ArgumentError("composite_band: empty band");
  RenderedBand out{band, width, ImageD(width, band.rows()), ImageD(width, band.rows()),
                   ImageD(width, band.rows())};
  const detail::TileBins bins = detail::bin_splats(sorted, width, s);
  const double k = s.support_sigmas();
  parallel_chunks(band.rows(), [&](int, int r0, int r1) {
    for (int r = r0; r < r1; ++r) {
      const double pv = band.begin + r;
      for (int u = 0; u < width; ++u) {
        const auto& list = bins.tiles[u / bins.tile_width];
        double T = 1.0;
        double C = 0.0;
        double D = 0.0;
        for (int j : list) {
          const ProjectedSplat& sp = sorted[j];
          if (!detail::in_support(sp, u, pv, k)) continue;
          const double du = u - sp.u;
          const double dv = pv - sp.v;
          const double a = splat_alpha(du * du + dv * dv, sp.sigma, s);
          if (a <= 0.0) continue;
          const double w = a * T;
          C += sp.intensity * w;
          D += sp.d * w;
          T *= 1.0 - a;
        }
        out.intensity(u, r) = C + background * T;
        out.disparity(u, r) = D;
        out.alpha_acc(u, r) = 1.0 - T;
      }
    }
  });
  return out;
}

/// Renders rows [band.begin, band.end) of view (x, y). Without motion the
/// Gaussians are projected as they are; with motion each centre is first
/// carried to the time-origin using its own observation time and then to
/// the band time.
inline RenderedBand render_band(const GaussianCloud& cloud, ViewIndex view, int angular,
                                Band band, int width, int height, const RSMotion* motion,
                                const LFIntrinsics& intr, const SplatSettings& s = {},
                                BandCache* cache = nullptr) {
  if (band.begin < 0 || band.end > height || band.rows() <= 0)
    throw ArgumentError("render_band: band [" + std::to_string(band.begin) + "," +
                        std::to_string(band.end) + ") empty or outside [0," +
                        std::to_string(height) + ")");
  const auto sorted = project_band(cloud, view, angular, band, width, motion, intr, s, cache);
  return composite_band(sorted, band, width, cloud.background, s);
}

/// Gradients of L = sum(residual * intensity) through render_band, with the
/// sort order and the observation times held fixed. `residual` is dL/dC over
/// the band (band.rows() x width).
inline BandGradients backward_band(const GaussianCloud& cloud, ViewIndex view, int angular,
                                   Band band, int width, int height, const RSMotion* motion,
                                   const LFIntrinsics& intr, const ImageD& residual,
                                   const SplatSettings& s = {},
                                   const BandCache* cache = nullptr) {
  if (residual.width() != width || residual.height() != band.rows())
    throw std::logic_error("backward_band: residual shape does not match the band");
  BandCache local;
  if (cache) {
    if (cache->view != view || cache->band != band || cache->cloud_size != cloud.size() ||
        cache->has_motion != (motion != nullptr) ||
        cache->jac_center.size() != cache->splats.size())
      throw std::logic_error("backward_band: forward cache does not match this band");
  } else {
    if (band.begin < 0 || band.end > height || band.rows() <= 0)
      throw ArgumentError("backward_band: band outside the image");
    project_band(cloud, view, angular, band, width, motion, intr, s, &local);
    cache = &local;
  }
  const auto& sorted = cache->splats;
  const std::size_t m = sorted.size();
  const detail::TileBins bins = detail::bin_splats(sorted, width, s);
  const double k = s.support_sigmas();
  const double gc = s.profile_cut();
  const double amp = s.profile_scale();
  const double lgc = std::log(gc);

  // image-space gradients per sorted splat: u, v, sigma, intensity
  struct Acc {
    std::vector<std::array<double, 4>> g;
  };
  const int workers = std::min(worker_count(), std::max(1, band.rows()));
  std::vector<Acc> acc(workers);
  for (auto& a : acc) a.g.assign(m, {0.0, 0.0, 0.0, 0.0});

  parallel_chunks(
      band.rows(),
      [&](int worker, int r0, int r1) {
        auto& G = acc[worker].g;
        struct Hit {
          int j;
          double alpha;
          double T;
          double g;
          double du;
          double dv;
        };
        std::vector<Hit> hits;
        for (int r = r0; r < r1; ++r) {
          const double pv = band.begin + r;
          for (int u = 0; u < width; ++u) {
            const double res = residual(u, r);
            if (res == 0.0) continue;
            hits.clear();
            double T = 1.0;
            for (int j : bins.tiles[u / bins.tile_width]) {
              const ProjectedSplat& sp = sorted[j];
              if (!detail::in_support(sp, u, pv, k)) continue;
              const double du = u - sp.u;
              const double dv = pv - sp.v;
              const double e = -0.5 * (du * du + dv * dv) / (sp.sigma * sp.sigma);
              const double g = std::exp(e);
              if (g <= gc) continue;
              const double a = amp * (g - gc - gc * (e - lgc));
              hits.push_back({j, a, T, g, du, dv});
              T *= 1.0 - a;
            }
            double rest = cloud.background;
            for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
              const ProjectedSplat& sp = sorted[it->j];
              const double dC_da = it->T * (sp.intensity - rest);
              const double dC_di = it->alpha * it->T;
              rest = it->alpha * sp.intensity + (1.0 - it->alpha) * rest;
              const double s2 = sp.sigma * sp.sigma;
              const double dL_dg = res * dC_da * amp * (1.0 - gc / it->g);
              auto& gj = G[it->j];
              gj[0] += dL_dg * it->g * it->du / s2;
              gj[1] += dL_dg * it->g * it->dv / s2;
              gj[2] += dL_dg * it->g * (it->du * it->du + it->dv * it->dv) / (s2 * sp.sigma);
              gj[3] += res * dC_di;
            }
          }
        }
      },
      workers);

  BandGradients out(cloud.size());
  for (std::size_t j = 0; j < m; ++j) {
    std::array<double, 4> g{0.0, 0.0, 0.0, 0.0};
    for (const auto& a : acc)
      for (int c = 0; c < 4; ++c) g[c] += a.g[j][c];
    const int i = sorted[j].index;
    const Eigen::Vector2d duv(g[0], g[1]);
    out.center[i] += cache->jac_center[j].transpose() * duv;
    out.sigma[i] += g[2];
    out.intensity[i] += g[3];
    if (motion) {
      out.omega += cache->jac_omega[j].transpose() * duv;
      out.vel += cache->jac_vel[j].transpose() * duv;
    }
  }
  return out;
}

/// Full-view render at a single instant: intensity, weight-composited
/// disparity and accumulated opacity, assembled band by band.
struct ViewRender {
  ImageD intensity;
  ImageD disparity;
  ImageD alpha;
};

inline ViewRender render_view_gs(const GaussianCloud& cloud, ViewIndex view, int angular,
                                 int width, int height, const LFIntrinsics& intr,
                                 const SplatSettings& s = {}, int band_height = 16) {
  ViewRender out{ImageD(width, height), ImageD(width, height), ImageD(width, height)};
  for (const Band& b : make_bands(height, band_height)) {
    const RenderedBand rb = render_band(cloud, view, angular, b, width, height, nullptr, intr, s);
    for (int r = 0; r < b.rows(); ++r)
      for (int u = 0; u < width; ++u) {
        out.intensity(u, b.begin + r) = rb.intensity(u, r);
        out.disparity(u, b.begin + r) = rb.disparity(u, r);
        out.alpha(u, b.begin + r) = rb.alpha_acc(u, r);
      }
  }
  return out;
}

/// Rolling-shutter render of a full view: each band at its own readout time.
inline ViewRender render_view_rs(const GaussianCloud& cloud, ViewIndex view, int angular,
                                 int width, int height, const RSMotion& motion,
                                 const LFIntrinsics& intr, const SplatSettings& s = {},
                                 int band_height = 16) {
  ViewRender out{ImageD(width, height), ImageD(width, height), ImageD(width, height)};
  for (const Band& b : make_bands(height, band_height)) {
    const RenderedBand rb =
        render_band(cloud, view, angular, b, width, height, &motion, intr, s);
    for (int r = 0; r < b.rows(); ++r)
      for (int u = 0; u < width; ++u) {
        out.intensity(u, b.begin + r) = rb.intensity(u, r);
        out.disparity(u, b.begin + r) = rb.disparity(u, r);
        out.alpha(u, b.begin + r) = rb.alpha_acc(u, r);
      }
  }
  return out;
}

/// Composited disparity divided by coverage; pixels with coverage below
/// `min_alpha` get `fill`.
inline ImageD normalized_disparity(const ViewRender& r, double min_alpha = 0.5,
                                   double fill = 0.0) {
  ImageD out(r.disparity.width(), r.disparity.height(), fill);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (r.alpha.data()[i] >= min_alpha)
      out.data()[i] = r.disparity.data()[i] / r.alpha.data()[i];
  return out;
}

/// Assigns each Gaussian the RGB of the nearest pixel of the central view
/// planes at its projected centre.
inline void assign_colors(GaussianCloud& cloud, const ImageView& red, const ImageView& green,
                          const ImageView& blue, const LFIntrinsics& intr) {
  cloud.rgb.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const PixelDisparity p = point_to_disparity(cloud.gaussians[i].center, intr);
    const int u = std::clamp(static_cast<int>(std::lround(p.u)), 0, red.width() - 1);
    const int v = std::clamp(static_cast<int>(std::lround(p.v)), 0, red.height() - 1);
    cloud.rgb[i] = {red(u, v), green(u, v), blue(u, v)};
  }
}

/// Composites the per-Gaussian RGB with the learned opacities; returns one
/// image per channel.
inline std::array<ImageD, 3> render_view_rgb(const GaussianCloud& cloud, ViewIndex view,
                                             int angular, int width, int height,
                                             const LFIntrinsics& intr,
                                             const SplatSettings& s = {}) {
  if (cloud.rgb.size() != cloud.size())
    throw ArgumentError("render_view_rgb: cloud has no per-Gaussian colour");
  std::array<ImageD, 3> out;
  for (int c = 0; c < 3; ++c) {
    GaussianCloud channel = cloud;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      channel.gaussians[i].intensity = cloud.rgb[i][c];
    out[c] = render_view_gs(channel, view, angular, width, height, intr, s).intensity;
  }
  return out;
}

}  // namespace rslf
