#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rslf/error.hpp"
#include "rslf/geometry.hpp"
#include "rslf/image.hpp"
#include "rslf/io/container.hpp"
#include "rslf/io/json_io.hpp"
#include "rslf/io/pfm.hpp"
#include "rslf/io/png.hpp"
#include "rslf/lightfield.hpp"
#include "rslf/parallel.hpp"

namespace rslf::synth {

enum class TextureKind { Constant, Checker, Noise };

/// Procedural solid texture evaluated on object-frame points, so it moves
/// rigidly with its primitive.
struct Texture {
  TextureKind kind = TextureKind::Noise;
  double period = 0.05;  // checker cell / noise lattice spacing, scene units
  double lo = 0.15;
  double hi = 0.85;
  int octaves = 2;
  std::uint64_t seed = 0;
  /// Checker only: width of the box filter applied to the cells, scene
  /// units. Hard edges alias to the supersampling grid and bias parallax.
  double edge_width = 0.0;

  double value(const Point3& p) const;
};

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double lattice(std::int64_t i, std::int64_t j, std::int64_t k, std::uint64_t seed) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(i));
  h = splitmix(h ^ static_cast<std::uint64_t>(j));
  h = splitmix(h ^ static_cast<std::uint64_t>(k));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

inline double value_noise(const Point3& p, std::uint64_t seed) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto i = static_cast<std::int64_t>(fx), j = static_cast<std::int64_t>(fy),
             k = static_cast<std::int64_t>(fz);
  const double tx = smooth(p.x() - fx), ty = smooth(p.y() - fy), tz = smooth(p.z() - fz);
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int a = c & 1, b = (c >> 1) & 1, e = (c >> 2) & 1;
    const double w = (a ? tx : 1.0 - tx) * (b ? ty : 1.0 - ty) * (e ? tz : 1.0 - tz);
    acc += w * lattice(i + a, j + b, k + e, seed);
  }
  return acc;
}

/// Box average over [x - w/2, x + w/2] of the +-1 square wave that is +1
/// on even cells of size p.
inline double filtered_square(double x, double p, double w) {
  if (w <= 0.0) return (static_cast<std::int64_t>(std::floor(x / p)) & 1) ? -1.0 : 1.0;
  auto ramp = [p](double t) {
    const double m = t - 2.0 * p * std::floor(t / (2.0 * p));
    return p - std::abs(m - p);
  };
  return (ramp(x + 0.5 * w) - ramp(x - 0.5 * w)) / w;
}

}  // namespace detail

inline double Texture::value(const Point3& p) const {
  switch (kind) {
    case TextureKind::Constant:
      return lo;
    case TextureKind::Checker: {
      // z stays hard: constant over a fronto-parallel plane, and a plane may
      // sit exactly on a cell boundary
      const double s = detail::filtered_square(p.x(), period, edge_width) *
                       detail::filtered_square(p.y(), period, edge_width) *
                       detail::filtered_square(p.z(), period, 0.0);
      return 0.5 * (lo + hi) + 0.5 * (lo - hi) * s;
    }
    case TextureKind::Noise: {
      double acc = 0.0, amp = 1.0, norm = 0.0, scale = 1.0 / period;
      for (int o = 0; o < octaves; ++o) {
        acc += amp * detail::value_noise(p * scale, seed + 977u * o);
        norm += amp;
        amp *= 0.5;
        scale *= 2.0;
      }
      // stretch the value-noise distribution (concentrated around 0.5)
      const double x = std::clamp(0.5 + 1.6 * (acc / norm - 0.5), 0.0, 1.0);
      return lo + (hi - lo) * x;
    }
  }
  return lo;
}

/// Rectangle in a plane of constant Z (object frame).
struct PlanePrim {
  Point3 center = Point3(0, 0, 1);
  double half_x = 1.0;
  double half_y = 1.0;
  Texture texture;
};

struct SpherePrim {
  Point3 center = Point3(0, 0, 1);
  double radius = 0.2;
  Texture texture;
};

struct SceneSpec {
  std::string name = "custom";
  std::vector<PlanePrim> planes;
  std::vector<SpherePrim> spheres;
  MotionParams motion;
  LFIntrinsics intr;
  RSTiming timing;
  int angular = 9;
  int width = 128;
  int height = 128;
  /// Sub-pixel samples per axis.
  int supersample = 2;
  /// Intensity of rays that hit nothing.
  double background = 0.0;

  int primitive_count() const { return static_cast<int>(planes.size() + spheres.size()); }
  void validate() const;
};

/// Desk-style intrinsics for a W x H light field (f scales with W).
inline LFIntrinsics desk_intrinsics(int width, int height) {
  LFIntrinsics intr;
  intr.w = 6.4;
  intr.F = 8.0;
  intr.b = 0.0063;
  intr.f = intr.F * width / intr.w;
  intr.u0 = (width - 1) / 2.0;
  intr.v0 = (height - 1) / 2.0;
  intr.Pf = 1.0;
  return intr;
}

/// Scene pose at time t: object-frame points map to camera frame as
/// R x + tv; rays are pulled back with R^T.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
};

inline Pose pose_at(double time, const MotionParams& m) {
  return {rodrigues(time * m.omega), time * m.vel};
}

struct Hit {
  double s = 0.0;  // ray parameter; equals camera depth for z-unit rays
  int primitive = -1;
  Point3 local = Point3::Zero();
};

/// Nearest intersection of a camera-frame ray (origin o, direction d with
/// d.z = 1) with the scene posed at `pose`.
inline std::optional<Hit> cast_ray(const SceneSpec& spec, const Pose& pose, const Point3& o,
                                   const Vec3& d) {
  const Point3 lo = pose.R.transpose() * (o - pose.t);
  const Vec3 ld = pose.R.transpose() * d;
  std::optional<Hit> best;
  int id = 0;
  for (const PlanePrim& p : spec.planes) {
    if (ld.z() != 0.0) {
      const double s = (p.center.z() - lo.z()) / ld.z();
      if (s > 0.0 && (!best || s < best->s)) {
        const Point3 x = lo + s * ld;
        if (std::abs(x.x() - p.center.x()) <= p.half_x &&
            std::abs(x.y() - p.center.y()) <= p.half_y)
          best = Hit{s, id, x};
      }
    }
    ++id;
  }
  for (const SpherePrim& sp : spec.spheres) {
    const Vec3 oc = lo - sp.center;
    const double a = ld.squaredNorm(), b = oc.dot(ld), c = oc.squaredNorm() - sp.radius * sp.radius;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double s = (-b - std::sqrt(disc)) / a;
      if (s > 0.0 && (!best || s < best->s)) best = Hit{s, id, lo + s * ld};
    }
    ++id;
  }
  return best;
}

inline double shade(const SceneSpec& spec, const std::optional<Hit>& h) {
  if (!h) return spec.background;
  const int np = static_cast<int>(spec.planes.size());
  return h->primitive < np ? spec.planes[h->primitive].texture.value(h->local)
                           : spec.spheres[h->primitive - np].texture.value(h->local);
}

/// Camera-frame ray through pixel (u, v) of view (x, y): the view centre is
/// offset by the view baseline and the principal point shifted so the focal
/// plane has zero parallax.
inline std::pair<Point3, Vec3> view_ray(double u, double v, ViewIndex view, int angular,
                                        const LFIntrinsics& intr) {
  const int c = (angular - 1) / 2;
  const double B = intr.view_baseline();
  const Point3 C((view.x - c) * B, (view.y - c) * B, 0.0);
  const double cu = intr.u0 + intr.f * C.x() / intr.Pf;
  const double cv = intr.v0 + intr.f * C.y() / intr.Pf;
  return {C, Vec3((u - cu) / intr.f, (v - cv) / intr.f, 1.0)};
}

inline void SceneSpec::validate() const {
  if (primitive_count() < 1) throw ArgumentError("scene: at least one primitive required");
  if (angular < 1 || angular % 2 == 0) throw ArgumentError("scene: angular size must be odd");
  if (width < 2 || height < 2) throw ArgumentError("scene: resolution too small");
  if (supersample < 1) throw ArgumentError("scene: supersample must be >= 1");
  intr.validate(width);
  if (!motion.finite()) throw ArgumentError("scene: non-finite motion");
  // every primitive must stay in front of the camera over the readout
  for (int v = 0; v < height; ++v) {
    const Pose p = pose_at(row_time(v, timing), motion);
    for (std::size_t i = 0; i < planes.size(); ++i) {
      const PlanePrim& pl = planes[i];
      for (int cx = -1; cx <= 1; ++cx)
        for (int cy = -1; cy <= 1; ++cy) {
          const Point3 q = pl.center + Vec3(cx * pl.half_x, cy * pl.half_y, 0.0);
          if ((p.R * q + p.t).z() <= 0.0)
            throw ArgumentError("scene: plane " + std::to_string(i) +
                                " passes behind the camera during readout");
        }
    }
    for (std::size_t i = 0; i < spheres.size(); ++i)
      if ((p.R * spheres[i].center + p.t).z() - spheres[i].radius <= 0.0)
        throw ArgumentError("scene: sphere " + std::to_string(i) +
                            " passes behind the camera during readout");
  }
}

/// One pose per acquisition time, shared by every SAI; counts lookups.
class PoseCache {
 public:
  PoseCache(const SceneSpec& spec, bool global_shutter, int band_height) {
    poses_.reserve(spec.height);
    for (int v = 0; v < spec.height; ++v) {
      double t = 0.0;
      if (!global_shutter) {
        const int b0 = v / band_height * band_height;
        const int b1 = std::min(spec.height, b0 + band_height);
        t = row_time(0.5 * (b0 + b1 - 1), spec.timing);
      }
      poses_.push_back(pose_at(t, spec.motion));
    }
  }
  const Pose& row(int v) const {
    lookups_.fetch_add(1, std::memory_order_relaxed);
    return poses_[v];
  }
  std::size_t computed() const { return poses_.size(); }
  std::size_t lookups() const { return lookups_.load(); }

 private:
  std::vector<Pose> poses_;
  mutable std::atomic<std::size_t> lookups_{0};
};

struct RenderOptions {
  /// Expose every row at t = 0 (the global-shutter reference).
  bool global_shutter = false;
  /// Rows sharing one acquisition time; 1 is true per-row rolling shutter.
  int band_height = 1;
};

struct SceneArtifacts {
  LightField4D lf;
  /// Global-shutter central view and depth on the 2W x 2H canvas.
  ImageF gt_central;
  ImageF gt_depth;
  /// Canvas pixels whose surface point is seen in the RS central SAI.
  Mask mask;
  MotionParams motion_gt;
  LFIntrinsics gt_intr;
  std::size_t poses_computed = 0;
  std::size_t pose_lookups = 0;
};

/// Intrinsics of the double field-of-view canvas.
inline LFIntrinsics canvas_intrinsics(const SceneSpec& spec) {
  return spec.intr.padded(spec.width / 2.0, spec.height / 2.0, spec.width);
}

/// Ray-casts every SAI; each pixel row is exposed at its own readout time
/// (or per band of band_height rows).
inline LightField4D render_lightfield(const SceneSpec& spec, PoseCache& cache) {
  const int A = spec.angular, W = spec.width, H = spec.height, ss = spec.supersample;
  LightField4D lf(A, W, H);
  parallel_chunks(A * A, [&](int, int begin, int end) {
    for (int k = begin; k < end; ++k) {
      const ViewIndex view{k % A, k / A};
      float* out = lf.mutable_view(view.x, view.y);
      for (int v = 0; v < H; ++v) {
        const Pose& pose = cache.row(v);
        for (int u = 0; u < W; ++u) {
          double acc = 0.0;
          for (int j = 0; j < ss; ++j)
            for (int i = 0; i < ss; ++i) {
              const double su = u + (i + 0.5) / ss - 0.5, sv = v + (j + 0.5) / ss - 0.5;
              const auto [o, d] = view_ray(su, sv, view, A, spec.intr);
              acc += shade(spec, cast_ray(spec, pose, o, d));
            }
          out[static_cast<std::size_t>(v) * W + u] = static_cast<float>(acc / (ss * ss));
        }
      }
    }
  });
  return lf;
}

inline SceneArtifacts render_rslf(const SceneSpec& spec, const RenderOptions& opt = {}) {
  spec.validate();
  if (opt.band_height < 1) throw ArgumentError("render_rslf: band height must be >= 1");
  const int A = spec.angular, W = spec.width, H = spec.height, ss = spec.supersample;
  const int c = (A - 1) / 2;
  PoseCache cache(spec, opt.global_shutter, opt.band_height);

  SceneArtifacts art;
  art.motion_gt = spec.motion;
  art.lf = render_lightfield(spec, cache);
  art.poses_computed = cache.computed();
  art.pose_lookups = cache.lookups();

  // Ground truth: static scene seen from the central view over a doubled canvas.
  const LFIntrinsics gi = canvas_intrinsics(spec);
  art.gt_intr = gi;
  const int GW = 2 * W, GH = 2 * H;
  art.gt_central = ImageF(GW, GH);
  art.gt_depth = ImageF(GW, GH, 0.0f);
  const Pose rest;
  parallel_chunks(GH, [&](int, int begin, int end) {
    for (int v = begin; v < end; ++v)
      for (int u = 0; u < GW; ++u) {
        double acc = 0.0;
        for (int j = 0; j < ss; ++j)
          for (int i = 0; i < ss; ++i) {
            const auto [o, d] = view_ray(u + (i + 0.5) / ss - 0.5, v + (j + 0.5) / ss - 0.5,
                                         {c, c}, A, gi);
            acc += shade(spec, cast_ray(spec, rest, o, d));
          }
        art.gt_central(u, v) = static_cast<float>(acc / (ss * ss));
        const auto [o, d] = view_ray(u, v, {c, c}, A, gi);
        if (const auto h = cast_ray(spec, rest, o, d)) art.gt_depth(u, v) = static_cast<float>(h->s);
      }
  });

  // Visibility: forward-map RS central-view hits (at their row times) to the
  // static canvas and keep those not occluded there.
  art.mask = Mask(GW, GH, 0);
  constexpr int ms = 3;
  for (int v = 0; v < H; ++v) {
    const Pose& pose = cache.row(v);
    for (int u = 0; u < W; ++u)
      for (int j = -1; j < ms; ++j)
        for (int i = 0; i < (j < 0 ? 1 : ms); ++i) {
          const double su = j < 0 ? u : u + (i + 0.5) / ms - 0.5;
          const double sv = j < 0 ? v : v + (j + 0.5) / ms - 0.5;
          const auto [o, d] = view_ray(su, sv, {c, c}, A, spec.intr);
          const auto h = cast_ray(spec, pose, o, d);
          if (!h) continue;
          const Point3& X = h->local;
          if (X.z() <= 0.0) continue;
          const long U = std::lround(gi.f * X.x() / X.z() + gi.u0);
          const long V = std::lround(gi.f * X.y() / X.z() + gi.v0);
          if (U < 0 || U >= GW || V < 0 || V >= GH) continue;
          const double zg = art.gt_depth(U, V);
          if (zg > 0.0 && std::abs(zg - X.z()) <= 0.02 * X.z()) art.mask(U, V) = 1;
        }
  }
  art.pose_lookups = cache.lookups();
  return art;
}

/// Largest image displacement over one full readout (t from -1/2 to 1/2) of
/// a point at depth Pf, sampled on a 9 x 9 pixel grid of the central view.
inline double max_displacement(const MotionParams& m, const LFIntrinsics& intr, int width,
                               int height) {
  const Pose a = pose_at(-0.5, m), b = pose_at(0.5, m);
  double best = 0.0;
  for (int j = 0; j < 9; ++j)
    for (int i = 0; i < 9; ++i) {
      const double u = (width - 1) * i / 8.0, v = (height - 1) * j / 8.0;
      const Point3 P((u - intr.u0) * intr.Pf / intr.f, (v - intr.v0) * intr.Pf / intr.f, intr.Pf);
      const Point3 pa = a.R * P + a.t, pb = b.R * P + b.t;
      const double du = intr.f * (pa.x() / pa.z() - pb.x() / pb.z());
      const double dv = intr.f * (pa.y() / pa.z() - pb.y() / pb.z());
      best = std::max(best, std::hypot(du, dv));
    }
  return best;
}

/// Pixel-displacement targets of the suite (per readout, depth Pf).
inline constexpr double kSlowTargets[5] = {3.0, 3.5, 4.0, 4.5, 5.0};
inline constexpr double kFastTargets[5] = {12.0, 14.0, 16.0, 18.0, 20.0};
inline constexpr double kSlowMaxDisplacement = 6.0;

enum class MotionCategory { GS, Slow, Fast };

inline std::string category_name(MotionCategory c) {
  switch (c) {
    case MotionCategory::GS: return "GS";
    case MotionCategory::Slow: return "slow";
    case MotionCategory::Fast: return "fast";
  }
  return "?";
}

inline MotionCategory classify_motion(const MotionParams& m, const LFIntrinsics& intr, int width,
                                      int height) {
  const double d = max_displacement(m, intr, width, height);
  if (d < 0.5) return MotionCategory::GS;
  return d <= kSlowMaxDisplacement * 1.5 ? MotionCategory::Slow : MotionCategory::Fast;
}

/// Eleven motions: zero, five slow and five fast. Each nonzero motion has a
/// dominant axis among vx, vz, omega_z, omega_y and a mixed direction, and is
/// scaled to its pixel-displacement target.
inline std::vector<MotionParams> motion_suite(const LFIntrinsics& intr = desk_intrinsics(128, 128),
                                              int width = 128, int height = 128) {
  const MotionParams dirs[5] = {
      {Vec3::Zero(), Vec3(1, 0, 0)},
      {Vec3::Zero(), Vec3(0, 0, 1)},
      {Vec3(0, 0, 1), Vec3::Zero()},
      {Vec3(0, 1, 0), Vec3::Zero()},
      {Vec3(0.15, -0.25, 0.2), Vec3(0.6, 0.35, -0.3)},
  };
  auto scaled = [&](const MotionParams& dir, double target) {
    double lo = 0.0, hi = 1.0;
    auto at = [&](double k) { return MotionParams{k * dir.omega, k * dir.vel}; };
    while (max_displacement(at(hi), intr, width, height) < target) hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (max_displacement(at(mid), intr, width, height) < target ? lo : hi) = mid;
    }
    return at(0.5 * (lo + hi));
  };
  std::vector<MotionParams> out{MotionParams{}};
  for (int k = 0; k < 5; ++k) out.push_back(scaled(dirs[k], kSlowTargets[k]));
  for (int k = 0; k < 5; ++k) out.push_back(scaled(dirs[k], kFastTargets[k]));
  return out;
}

namespace detail {

inline Texture noise(std::uint64_t seed, double period, int octaves) {
  return Texture{TextureKind::Noise, period, 0.1, 0.9, octaves, seed};
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"plane", "checker", "sphere", "mixed"};
  return names;
}

/// Built-in scenes. Each has a textured background plane; noise features
/// span about `feature_px` pixels at 128 x 128.
inline SceneSpec make_preset(const std::string& name, int size = 128, std::uint64_t seed = 0,
                             int angular = 9, double feature_px = 5.0, int octaves = 2) {
  SceneSpec s;
  s.name = name;
  s.width = s.height = size;
  s.angular = angular;
  s.intr = desk_intrinsics(size, size);
  s.timing = RSTiming::for_height(size, s.intr.v0);
  const double feature = feature_px / 160.0;  // image-space feature size over f at 128 px
  auto period = [&](double z) { return feature * z; };
  auto pixel = [&](double z) { return z / s.intr.f; };
  const std::uint64_t base = detail::splitmix(seed);
  if (name == "plane") {
    s.planes.push_back({Point3(0, 0, 0.7), 1.0, 1.0, detail::noise(base + 1, period(0.7), octaves)});
  } else if (name == "checker") {
    s.planes.push_back({Point3(0.02, -0.01, 0.7), 0.16, 0.16,
                        Texture{TextureKind::Checker, 0.035, 0.1, 0.9, 1, 0, pixel(0.7)}});
    s.planes.push_back({Point3(0, 0, 2.5), 3.0, 3.0, detail::noise(base + 2, period(2.5), octaves)});
  } else if (name == "sphere") {
    s.spheres.push_back({Point3(0.0, 0.0, 0.9), 0.22, detail::noise(base + 3, period(0.7), octaves)});
    s.planes.push_back({Point3(0, 0, 2.2), 3.0, 3.0, detail::noise(base + 4, period(2.2), octaves)});
  } else if (name == "mixed") {
    s.planes.push_back({Point3(-0.17, 0.04, 0.65), 0.11, 0.2, detail::noise(base + 5, period(0.65), octaves)});
    s.planes.push_back({Point3(0.28, -0.05, 1.3), 0.22, 0.3,
                        Texture{TextureKind::Checker, 0.08, 0.15, 0.85, 1, 0, pixel(1.3)}});
    s.spheres.push_back({Point3(0.08, 0.12, 0.95), 0.13, detail::noise(base + 6, period(0.8), octaves)});
    s.planes.push_back({Point3(0, 0, 2.5), 3.0, 3.0, detail::noise(base + 7, period(2.5), octaves)});
  } else {
    throw ArgumentError("unknown scene preset '" + name + "' (expected plane, checker, sphere, mixed)");
  }
  return s;
}

// scene.json

inline io::Json to_json(const Texture& t) {
  static const char* kinds[] = {"constant", "checker", "noise"};
  return {{"kind", kinds[static_cast<int>(t.kind)]}, {"period", t.period}, {"lo", t.lo},
          {"hi", t.hi}, {"octaves", t.octaves}, {"seed", t.seed}, {"edge_width", t.edge_width}};
}

inline Texture texture_from_json(const io::Json& j) {
  Texture t;
  const std::string k = j.at("kind");
  if (k == "constant") t.kind = TextureKind::Constant;
  else if (k == "checker") t.kind = TextureKind::Checker;
  else if (k == "noise") t.kind = TextureKind::Noise;
  else throw DataError("scene.json: unknown texture kind '" + k + "'");
  t.period = j.at("period");
  t.lo = j.at("lo");
  t.hi = j.at("hi");
  t.octaves = j.at("octaves");
  t.seed = j.at("seed");
  t.edge_width = j.value("edge_width", 0.0);
  return t;
}

inline io::Json to_json(const SceneSpec& s) {
  io::Json planes = io::Json::array(), spheres = io::Json::array();
  for (const auto& p : s.planes)
    planes.push_back({{"center", io::to_json(p.center)}, {"half_x", p.half_x},
                      {"half_y", p.half_y}, {"texture", to_json(p.texture)}});
  for (const auto& p : s.spheres)
    spheres.push_back({{"center", io::to_json(p.center)}, {"radius", p.radius},
                       {"texture", to_json(p.texture)}});
  return {{"name", s.name}, {"planes", planes}, {"spheres", spheres},
          {"motion", io::to_json(s.motion)}, {"intrinsics", io::to_json(s.intr)},
          {"timing", {{"row_period", s.timing.row_period}, {"center_row", s.timing.center_row}}},
          {"angular", s.angular}, {"width", s.width}, {"height", s.height},
          {"supersample", s.supersample}, {"background", s.background}};
}

inline SceneSpec scene_from_json(const io::Json& j) {
  try {
    SceneSpec s;
    s.name = j.value("name", "custom");
    for (const auto& p : j.at("planes"))
      s.planes.push_back({io::vec3_from_json(p.at("center")), p.at("half_x"), p.at("half_y"),
                          texture_from_json(p.at("texture"))});
    for (const auto& p : j.at("spheres"))
      s.spheres.push_back({io::vec3_from_json(p.at("center")), p.at("radius"),
                           texture_from_json(p.at("texture"))});
    s.motion = io::motion_from_json(j.at("motion"));
    s.intr = io::intrinsics_from_json(j.at("intrinsics"));
    s.timing.row_period = j.at("timing").at("row_period");
    s.timing.center_row = j.at("timing").at("center_row");
    s.angular = j.at("angular");
    s.width = j.at("width");
    s.height = j.at("height");
    s.supersample = j.value("supersample", 2);
    s.background = j.value("background", 0.0);
    return s;
  } catch (const io::Json::exception& e) {
    throw DataError(std::string("scene.json: ") + e.what());
  }
}

/// Writes the dataset: light-field container, gt_central.png, gt_depth.pfm,
/// mask.png and scene.json. meta.json carries motion_gt and the canvas
/// intrinsics.
inline void write_dataset(const SceneSpec& spec, const SceneArtifacts& art,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::Json extra{{"scene", spec.name},
                 {"gt_intrinsics", io::to_json(art.gt_intr)},
                 {"max_displacement", max_displacement(spec.motion, spec.intr, spec.width,
                                                       spec.height)},
                 {"category", category_name(classify_motion(spec.motion, spec.intr, spec.width,
                                                            spec.height))}};
  io::write_lightfield(art.lf, spec.intr, spec.timing, dir, art.motion_gt, extra);
  io::write_gray16(dir / "gt_central.png", art.gt_central);
  io::write_pfm(dir / "gt_depth.pfm", art.gt_depth);
  io::write_mask(dir / "mask.png", art.mask);
  io::write_file(dir / "scene.json", to_json(spec).dump(2) + "\n");
}

}  // namespace rslf::synth
