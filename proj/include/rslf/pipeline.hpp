#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rslf/adam.hpp"
#include "rslf/error.hpp"
#include "rslf/geometry.hpp"
#include "rslf/init.hpp"
#include "rslf/io/json_io.hpp"
#include "rslf/lightfield.hpp"
#include "rslf/splat.hpp"

namespace rslf {

inline constexpr const char* kVersion = "1.0.0";

enum class LossNorm { L2, L1 };
enum class Ablation { Full, NoInit, NoMotion, None };

inline std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoInit: return "no-init";
    case Ablation::NoMotion: return "no-motion";
    case Ablation::None: return "none";
  }
  return "?";
}

inline Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::Full;
  if (s == "no-init" || s == "no_init") return Ablation::NoInit;
  if (s == "no-motion" || s == "no_motion") return Ablation::NoMotion;
  if (s == "none") return Ablation::None;
  throw ArgumentError("unknown ablation '" + s + "' (expected full, no-init, no-motion, none)");
}

/// Defaults tuned on the 128 x 128 synthetic presets; see README.
struct OptimConfig {
  int iters_stage1 = 2000;
  int iters_stage2 = 100;
  double lr_position = 1e-4;
  double lr_sigma = 3e-3;
  double lr_intensity = 3e-3;
  double lr_omega = 3e-3;
  double lr_vel = 3e-3;
  int band_height = 16;
  LossNorm loss_norm = LossNorm::L2;
  /// Stage 2 compares corner views the Stage-1 cloud cannot fully explain
  /// (vertical disocclusions); L1 keeps those pixels from steering motion.
  LossNorm loss_norm_stage2 = LossNorm::L1;
  AdamHyper adam;
  std::uint64_t seed = 0;
  /// Gaussian count; 0 picks the resolution-scaled default.
  int gaussians = 0;
  int stage1_views = 5;
  /// Stage-2 iterations sweep every (corner view, band) pair when true;
  /// otherwise one pair per iteration in shuffled round-robin order.
  bool stage2_full_batch = true;
  /// Analytic motion gradient, or central differences on the six motion
  /// parameters.
  bool stage2_finite_difference = false;
  ReimageTime reimage = ReimageTime::Center;
  double divergence_factor = 10.0;
  int divergence_window = 20;
  PlaneSweepSettings sweep;
  SplatSettings splat;

  void validate() const {
    if (iters_stage1 < 0 || iters_stage2 < 0) throw ArgumentError("iterations must be >= 0");
    for (double lr : {lr_position, lr_sigma, lr_intensity, lr_omega, lr_vel})
      if (!(lr > 0.0)) throw ArgumentError("learning rates must be positive");
    if (band_height < 1) throw ArgumentError("band height must be >= 1");
    if (gaussians < 0) throw ArgumentError("gaussian count must be >= 0");
    sweep.validate();
  }
};

inline io::Json to_json(const OptimConfig& c) {
  return {{"iters_stage1", c.iters_stage1},
          {"iters_stage2", c.iters_stage2},
          {"lr_position", c.lr_position},
          {"lr_sigma", c.lr_sigma},
          {"lr_intensity", c.lr_intensity},
          {"lr_omega", c.lr_omega},
          {"lr_vel", c.lr_vel},
          {"band_height", c.band_height},
          {"loss_norm", c.loss_norm == LossNorm::L2 ? "L2" : "L1"},
          {"loss_norm_stage2", c.loss_norm_stage2 == LossNorm::L2 ? "L2" : "L1"},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"seed", c.seed},
          {"gaussians", c.gaussians},
          {"stage1_views", c.stage1_views},
          {"stage2_full_batch", c.stage2_full_batch},
          {"stage2_finite_difference", c.stage2_finite_difference},
          {"reimage", c.reimage == ReimageTime::Center ? "center" : "band"},
          {"divergence_factor", c.divergence_factor},
          {"divergence_window", c.divergence_window},
          {"sweep",
           {{"d_min", c.sweep.d_min}, {"d_max", c.sweep.d_max}, {"steps", c.sweep.steps},
            {"window", c.sweep.window}, {"views", c.sweep.views}, {"cost_max", c.sweep.cost_max}}},
          {"splat",
           {{"alpha_cap", c.splat.alpha_cap}, {"alpha_cull", c.splat.alpha_cull},
            {"sigma_min", c.splat.sigma_min}, {"sigma_max", c.splat.sigma_max},
            {"tile_width", c.splat.tile_width}}}};
}

/// Overlays the keys present in `j` (same layout as to_json) onto `c`.
/// Unknown keys and mistyped values are argument errors.
inline void apply_config(OptimConfig& c, const io::Json& j) {
  auto norm = [](const io::Json& v) {
    const std::string s = v.get<std::string>();
    if (s == "L1" || s == "l1") return LossNorm::L1;
    if (s == "L2" || s == "l2") return LossNorm::L2;
    throw ArgumentError("loss norm must be L1 or L2, got '" + s + "'");
  };
  auto walk = [](const io::Json& obj, const std::string& where, auto&& set) {
    if (!obj.is_object()) throw ArgumentError(where + ": expected an object");
    for (const auto& [k, v] : obj.items()) {
      try {
        if (!set(k, v)) throw ArgumentError("unknown config key '" + where + k + "'");
      } catch (const io::Json::exception& e) {
        throw ArgumentError("config key '" + where + k + "': " + e.what());
      }
    }
  };
  walk(j, "", [&](const std::string& k, const io::Json& v) {
    if (k == "iters_stage1") c.iters_stage1 = v.get<int>();
    else if (k == "iters_stage2") c.iters_stage2 = v.get<int>();
    else if (k == "lr_position") c.lr_position = v.get<double>();
    else if (k == "lr_sigma") c.lr_sigma = v.get<double>();
    else if (k == "lr_intensity") c.lr_intensity = v.get<double>();
    else if (k == "lr_omega") c.lr_omega = v.get<double>();
    else if (k == "lr_vel") c.lr_vel = v.get<double>();
    else if (k == "band_height") c.band_height = v.get<int>();
    else if (k == "loss_norm") c.loss_norm = norm(v);
    else if (k == "loss_norm_stage2") c.loss_norm_stage2 = norm(v);
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "gaussians") c.gaussians = v.get<int>();
    else if (k == "stage1_views") c.stage1_views = v.get<int>();
    else if (k == "stage2_full_batch") c.stage2_full_batch = v.get<bool>();
    else if (k == "stage2_finite_difference") c.stage2_finite_difference = v.get<bool>();
    else if (k == "divergence_factor") c.divergence_factor = v.get<double>();
    else if (k == "divergence_window") c.divergence_window = v.get<int>();
    else if (k == "reimage") {
      const std::string s = v.get<std::string>();
      if (s == "center") c.reimage = ReimageTime::Center;
      else if (s == "band") c.reimage = ReimageTime::Band;
      else throw ArgumentError("reimage must be center or band, got '" + s + "'");
    } else if (k == "adam") {
      walk(v, "adam.", [&](const std::string& a, const io::Json& x) {
        if (a == "beta1") c.adam.beta1 = x.get<double>();
        else if (a == "beta2") c.adam.beta2 = x.get<double>();
        else if (a == "eps") c.adam.eps = x.get<double>();
        else return false;
        return true;
      });
    } else if (k == "sweep") {
      walk(v, "sweep.", [&](const std::string& a, const io::Json& x) {
        if (a == "d_min") c.sweep.d_min = x.get<double>();
        else if (a == "d_max") c.sweep.d_max = x.get<double>();
        else if (a == "steps") c.sweep.steps = x.get<int>();
        else if (a == "window") c.sweep.window = x.get<int>();
        else if (a == "views") c.sweep.views = x.get<int>();
        else if (a == "cost_max") c.sweep.cost_max = x.get<double>();
        else return false;
        return true;
      });
    } else if (k == "splat") {
      walk(v, "splat.", [&](const std::string& a, const io::Json& x) {
        if (a == "alpha_cap") c.splat.alpha_cap = x.get<double>();
        else if (a == "alpha_cull") c.splat.alpha_cull = x.get<double>();
        else if (a == "sigma_min") c.splat.sigma_min = x.get<double>();
        else if (a == "sigma_max") c.splat.sigma_max = x.get<double>();
        else if (a == "tile_width") c.splat.tile_width = x.get<int>();
        else return false;
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
}

struct LossRecord {
  int iter = 0;
  int stage = 0;
  ViewIndex view;
  int band = 0;
  double loss = 0.0;

  bool operator==(const LossRecord&) const = default;
};

using LossTrace = std::vector<LossRecord>;

namespace detail {

/// Band loss against the measured SAI rows, and dLoss/dC into `residual`.
inline double band_loss(const RenderedBand& rb, const ImageView& measured, LossNorm norm,
                        ImageD* residual) {
  const int W = rb.intensity.width(), R = rb.intensity.height();
  const double n = static_cast<double>(W) * R;
  if (residual) *residual = ImageD(W, R);
  double loss = 0.0;
  for (int r = 0; r < R; ++r) {
    const float* row = measured.row(rb.band.begin + r);
    for (int u = 0; u < W; ++u) {
      const double e = rb.intensity(u, r) - row[u];
      if (norm == LossNorm::L2) {
        loss += e * e / n;
        if (residual) (*residual)(u, r) = 2.0 * e / n;
      } else {
        loss += std::abs(e) / n;
        if (residual) (*residual)(u, r) = (e > 0.0 ? 1.0 : e < 0.0 ? -1.0 : 0.0) / n;
      }
    }
  }
  return loss;
}

inline void pack(const GaussianCloud& c, std::vector<double>& p) {
  p.resize(5 * c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& g = c.gaussians[i];
    p[5 * i + 0] = g.center.x();
    p[5 * i + 1] = g.center.y();
    p[5 * i + 2] = g.center.z();
    p[5 * i + 3] = g.sigma;
    p[5 * i + 4] = g.intensity;
  }
}

inline void unpack(const std::vector<double>& p, GaussianCloud& c, const SplatSettings& s) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto& g = c.gaussians[i];
    g.center = Point3(p[5 * i + 0], p[5 * i + 1], p[5 * i + 2]);
    g.sigma = std::clamp(p[5 * i + 3], s.sigma_min, s.sigma_max);
    g.intensity = std::clamp(p[5 * i + 4], 0.0, 1.0);
  }
}

[[noreturn]] inline void abort_non_finite(const GaussianCloud& c, const std::vector<double>& grads,
                                          const char* stage, int iter) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& g = c.gaussians[i];
    bool bad = !g.center.allFinite() || !std::isfinite(g.sigma) || !std::isfinite(g.intensity);
    for (int k = 0; k < 5 && !bad && 5 * i + k < grads.size(); ++k)
      bad = !std::isfinite(grads[5 * i + k]);
    if (bad)
      throw NumericalError(std::string(stage) + ": non-finite loss at iteration " +
                           std::to_string(iter) + ", first offending Gaussian " +
                           std::to_string(i));
  }
  throw NumericalError(std::string(stage) + ": non-finite loss at iteration " +
                       std::to_string(iter));
}

/// (view, band) pairs visited in rounds; each round is a fresh seeded shuffle.
class RoundRobin {
 public:
  RoundRobin(std::vector<ViewIndex> views, int n_bands, std::mt19937_64& rng) : rng_(&rng) {
    for (const ViewIndex& v : views)
      for (int b = 0; b < n_bands; ++b) pairs_.push_back({v, b});
    pos_ = pairs_.size();
  }
  std::pair<ViewIndex, int> next() {
    if (pos_ == pairs_.size()) {
      std::shuffle(pairs_.begin(), pairs_.end(), *rng_);
      pos_ = 0;
    }
    return pairs_[pos_++];
  }

 private:
  std::mt19937_64* rng_;
  std::vector<std::pair<ViewIndex, int>> pairs_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Photometric fine-tuning of the 5N Gaussian parameters against central-row
/// views, one (view, band) pair per iteration, without motion.
template <ViewSource Src>
GaussianCloud stage1_finetune(GaussianCloud cloud, const Src& lf, const LFIntrinsics& intr,
                              const OptimConfig& cfg, std::mt19937_64& rng,
                              LossTrace* trace = nullptr) {
  cloud.validate(cfg.splat);
  const int A = lf.angular_size(), W = lf.width(), H = lf.height();
  const auto bands = make_bands(H, cfg.band_height);
  detail::RoundRobin schedule(central_row_views(A, std::min(cfg.stage1_views, A)),
                              static_cast<int>(bands.size()), rng);
  const std::size_t n = cloud.size();
  std::vector<double> params, grads(5 * n), lr(5 * n);
  for (std::size_t i = 0; i < n; ++i) {
    lr[5 * i + 0] = lr[5 * i + 1] = lr[5 * i + 2] = cfg.lr_position;
    lr[5 * i + 3] = cfg.lr_sigma;
    lr[5 * i + 4] = cfg.lr_intensity;
  }
  detail::pack(cloud, params);
  AdamState state(5 * n);
  for (int it = 0; it < cfg.iters_stage1; ++it) {
    const auto [view, b] = schedule.next();
    const Band band = bands[b];
    BandCache cache;
    const RenderedBand rb =
        render_band(cloud, view, A, band, W, H, nullptr, intr, cfg.splat, &cache);
    ImageD residual;
    const double loss = detail::band_loss(rb, lf.view(view.x, view.y), cfg.loss_norm, &residual);
    const BandGradients g =
        backward_band(cloud, view, A, band, W, H, nullptr, intr, residual, cfg.splat, &cache);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) grads[5 * i + k] = g.center[i][k];
      grads[5 * i + 3] = g.sigma[i];
      grads[5 * i + 4] = g.intensity[i];
    }
    if (!std::isfinite(loss)) detail::abort_non_finite(cloud, grads, "stage 1", it);
    if (trace) trace->push_back({it, 1, view, b, loss});
    adam_step(params, grads, state, lr, cfg.adam);
    detail::unpack(params, cloud, cfg.splat);
    detail::pack(cloud, params);  // keep the optimizer on the clamped values
  }
  return cloud;
}

/// Mean band loss over the given (view, band) pairs under motion m, with the
/// motion gradient when requested.
template <ViewSource Src>
double motion_loss(const GaussianCloud& cloud, const Src& lf, const LFIntrinsics& intr,
                   const RSTiming& timing, std::span<const double> tau, const MotionParams& m,
                   const std::vector<std::pair<ViewIndex, int>>& pairs,
                   const std::vector<Band>& bands, const OptimConfig& cfg,
                   Vec3* g_omega = nullptr, Vec3* g_vel = nullptr,
                   std::vector<double>* per_pair = nullptr) {
  const int A = lf.angular_size(), W = lf.width(), H = lf.height();
  const RSMotion rs{m, timing, tau, cfg.reimage};
  const double scale = 1.0 / static_cast<double>(pairs.size());
  double total = 0.0;
  if (g_omega) *g_omega = Vec3::Zero();
  if (g_vel) *g_vel = Vec3::Zero();
  if (per_pair) per_pair->clear();
  for (const auto& [view, b] : pairs) {
    BandCache cache;
    const RenderedBand rb =
        render_band(cloud, view, A, bands[b], W, H, &rs, intr, cfg.splat, &cache);
    ImageD residual;
    const double loss = detail::band_loss(rb, lf.view(view.x, view.y), cfg.loss_norm_stage2,
                                          g_omega ? &residual : nullptr);
    total += scale * loss;
    if (per_pair) per_pair->push_back(loss);
    if (g_omega) {
      for (auto& r : residual.data()) r *= scale;
      const BandGradients g = backward_band(cloud, view, A, bands[b], W, H, &rs, intr,
                                            residual, cfg.splat, &cache);
      *g_omega += g.omega;
      *g_vel += g.vel;
    }
  }
  return total;
}

/// Motion estimation from the corner views: Gaussians are carried to the
/// time origin with their own observation times and re-imaged per
/// `cfg.reimage`; only (omega, v) are optimized. The cloud is never modified.
template <ViewSource Src>
MotionParams stage2_motion(const GaussianCloud& cloud, const Src& lf, const LFIntrinsics& intr,
                           const RSTiming& timing, const OptimConfig& cfg, std::mt19937_64& rng,
                           LossTrace* trace = nullptr,
                           std::optional<std::vector<ViewIndex>> views = std::nullopt) {
  cloud.validate(cfg.splat);
  const int A = lf.angular_size(), H = lf.height();
  const auto bands = make_bands(H, cfg.band_height);
  const std::vector<ViewIndex> vs = views ? *views : corner_views(A);
  const std::vector<double> tau = observation_times(cloud, intr, timing);
  detail::RoundRobin schedule(vs, static_cast<int>(bands.size()), rng);
  std::vector<std::pair<ViewIndex, int>> all;
  for (const ViewIndex& v : vs)
    for (int b = 0; b < static_cast<int>(bands.size()); ++b) all.push_back({v, b});

  MotionParams m;
  std::vector<double> params(6, 0.0), grads(6), lr(6);
  std::fill(lr.begin(), lr.begin() + 3, cfg.lr_omega);
  std::fill(lr.begin() + 3, lr.end(), cfg.lr_vel);
  AdamState state(6);
  double initial = -1.0;
  int above = 0;
  std::vector<double> per_pair;
  for (int it = 0; it < cfg.iters_stage2; ++it) {
    std::vector<std::pair<ViewIndex, int>> batch =
        cfg.stage2_full_batch ? all : std::vector<std::pair<ViewIndex, int>>{schedule.next()};
    Vec3 go, gv;
    double loss;
    if (!cfg.stage2_finite_difference) {
      loss = motion_loss(cloud, lf, intr, timing, tau, m, batch, bands, cfg, &go, &gv, &per_pair);
    } else {
      loss = motion_loss(cloud, lf, intr, timing, tau, m, batch, bands, cfg, nullptr, nullptr,
                         &per_pair);
      for (int k = 0; k < 6; ++k) {
        constexpr double h = 1e-5;
        MotionParams a = m, b = m;
        (k < 3 ? a.omega[k] : a.vel[k - 3]) += h;
        (k < 3 ? b.omega[k] : b.vel[k - 3]) -= h;
        const double d = (motion_loss(cloud, lf, intr, timing, tau, a, batch, bands, cfg) -
                          motion_loss(cloud, lf, intr, timing, tau, b, batch, bands, cfg)) /
                         (2.0 * h);
        (k < 3 ? go[k] : gv[k - 3]) = d;
      }
    }
    if (!std::isfinite(loss) || !go.allFinite() || !gv.allFinite())
      throw NumericalError("stage 2: non-finite loss or motion gradient at iteration " +
                           std::to_string(it));
    if (trace)
      for (std::size_t k = 0; k < batch.size(); ++k)
        trace->push_back({it, 2, batch[k].first, batch[k].second, per_pair[k]});
    if (initial < 0.0) initial = loss;
    above = loss > cfg.divergence_factor * initial ? above + 1 : 0;
    if (above >= cfg.divergence_window)
      throw NumericalError("stage 2 diverged: loss above " +
                           std::to_string(cfg.divergence_factor) + "x the initial value for " +
                           std::to_string(above) + " iterations (iteration " +
                           std::to_string(it) + ")");
    for (int k = 0; k < 3; ++k) {
      grads[k] = go[k];
      grads[3 + k] = gv[k];
    }
    adam_step(params, grads, state, lr, cfg.adam);
    m.omega = Vec3(params[0], params[1], params[2]);
    m.vel = Vec3(params[3], params[4], params[5]);
  }
  return m;
}

/// Motion-compensated central view on the doubled canvas.
struct Compensated {
  GaussianCloud static_cloud;
  LFIntrinsics canvas_intr;
  ImageD intensity;
  ImageD disparity;
  ImageD depth;
  ImageD alpha;
  Mask valid;
};

/// Depth from normalized disparity; 0 where no physical depth exists.
inline double depth_from_disparity(double d, const LFIntrinsics& intr) {
  const double den = d * intr.Pf * intr.w + intr.beta();
  return den > 0.0 ? intr.beta() * intr.Pf / den : 0.0;
}

/// Moves every centre to the time origin with its own observation time and
/// renders the central view globally over a 2W x 2H canvas.
inline Compensated compensate(const GaussianCloud& cloud, const MotionParams& m,
                              const LFIntrinsics& intr, const RSTiming& timing, int angular,
                              int width, int height, const SplatSettings& s = {},
                              double min_alpha = 0.5) {
  if (!m.finite()) throw NumericalError("compensate: non-finite motion");
  Compensated out;
  out.static_cloud = cloud;
  const std::vector<double> tau = observation_times(cloud, intr, timing);
  for (std::size_t i = 0; i < cloud.size(); ++i)
    out.static_cloud.gaussians[i].center = deform_to_static(cloud.gaussians[i].center, tau[i], m);
  out.canvas_intr = intr.padded(width / 2.0, height / 2.0, width);
  const int c = (angular - 1) / 2;
  const ViewRender r = render_view_gs(out.static_cloud, {c, c}, angular, 2 * width, 2 * height,
                                      out.canvas_intr, s);
  out.intensity = r.intensity;
  out.alpha = r.alpha;
  out.disparity = normalized_disparity(r, min_alpha, 0.0);
  out.depth = ImageD(2 * width, 2 * height, 0.0);
  out.valid = Mask(2 * width, 2 * height, 0);
  for (std::size_t i = 0; i < out.depth.size(); ++i) {
    if (r.alpha.data()[i] < min_alpha) continue;
    const double z = depth_from_disparity(out.disparity.data()[i], out.canvas_intr);
    if (z > 0.0) {
      out.depth.data()[i] = z;
      out.valid.data()[i] = 1;
    }
  }
  return out;
}

struct RunResult {
  Ablation ablation = Ablation::Full;
  DisparityMap disparity;
  GaussianCloud seeded;
  GaussianCloud cloud;  // after Stage 1 (or the seed when skipped)
  MotionParams motion;
  Compensated compensated;
  LossTrace trace;
};

/// seed -> [Stage 1] -> [Stage 2] -> compensate. Stage 1 is skipped for
/// no-init and none; Stage 2 for no-motion and none (motion stays zero).
/// On a numerical abort the losses recorded so far go to `partial_trace`.
template <ViewSource Src>
RunResult run_full(const Src& lf, const LFIntrinsics& intr, const RSTiming& timing,
                   const OptimConfig& cfg, Ablation ablation,
                   LossTrace* partial_trace = nullptr) {
  cfg.validate();
  const int A = lf.angular_size(), W = lf.width(), H = lf.height();
  const int c = (A - 1) / 2;
  intr.validate(W);
  std::mt19937_64 rng(cfg.seed);
  RunResult out;
  out.ablation = ablation;
  out.disparity = estimate_disparity_central_row(lf, cfg.sweep);
  const int n = cfg.gaussians > 0 ? cfg.gaussians : default_gaussian_count(W, H);
  SeedSettings seed_opt;
  seed_opt.seed = rng();
  out.seeded = seed_gaussians(lf.view(c, c), out.disparity, n, intr, seed_opt, cfg.splat);
  out.cloud = out.seeded;
  const bool do_init = ablation == Ablation::Full || ablation == Ablation::NoMotion;
  const bool do_motion = ablation == Ablation::Full || ablation == Ablation::NoInit;
  std::mt19937_64 rng1(rng()), rng2(rng());
  try {
    if (do_init) out.cloud = stage1_finetune(out.cloud, lf, intr, cfg, rng1, &out.trace);
    if (do_motion) out.motion = stage2_motion(out.cloud, lf, intr, timing, cfg, rng2, &out.trace);
  } catch (const NumericalError&) {
    if (partial_trace) *partial_trace = out.trace;
    throw;
  }
  out.compensated = compensate(out.cloud, out.motion, intr, timing, A, W, H, cfg.splat);
  return out;
}

}  // namespace rslf
