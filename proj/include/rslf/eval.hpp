#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rslf/io/container.hpp"
#include "rslf/run.hpp"
#include "rslf/synth.hpp"

namespace rslf::eval {

using io::Json;

namespace detail {

template <typename P, typename G>
void check_shapes(const Image<P>& pred, const Image<G>& gt, const Mask& mask, const char* what) {
  if (pred.width() != gt.width() || pred.height() != gt.height() ||
      mask.width() != gt.width() || mask.height() != gt.height())
    throw ArgumentError(std::string(what) + ": prediction, ground truth and mask differ in size");
}

}  // namespace detail

/// Mean |pred - gt| over the mask.
template <typename P, typename G>
double abs_diff(const Image<P>& pred, const Image<G>& gt, const Mask& mask) {
  detail::check_shapes(pred, gt, mask, "abs_diff");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask.data()[i]) continue;
    sum += std::abs(static_cast<double>(pred.data()[i]) - static_cast<double>(gt.data()[i]));
    ++n;
  }
  if (n == 0) throw ArgumentError("abs_diff: empty mask");
  return sum / static_cast<double>(n);
}

template <typename P, typename G>
double rmse(const Image<P>& pred, const Image<G>& gt, const Mask& mask) {
  detail::check_shapes(pred, gt, mask, "rmse");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask.data()[i]) continue;
    const double e = static_cast<double>(pred.data()[i]) - static_cast<double>(gt.data()[i]);
    sum += e * e;
    ++n;
  }
  if (n == 0) throw ArgumentError("rmse: empty mask");
  return std::sqrt(sum / static_cast<double>(n));
}

/// Fraction of masked pixels with |pred - gt| / gt < 0.25. Pixels whose gt
/// is not positive are left out and counted in `excluded`.
template <typename P, typename G>
double delta_125(const Image<P>& pred, const Image<G>& gt, const Mask& mask,
                 std::size_t* excluded = nullptr) {
  detail::check_shapes(pred, gt, mask, "delta_125");
  std::size_t hit = 0, n = 0, skipped = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask.data()[i]) continue;
    const double g = static_cast<double>(gt.data()[i]);
    if (!(g > 0.0)) {
      ++skipped;
      continue;
    }
    ++n;
    if (std::abs(static_cast<double>(pred.data()[i]) - g) / g < 0.25) ++hit;
  }
  if (excluded) *excluded = skipped;
  if (n == 0) throw ArgumentError("delta_125: no masked pixel with positive ground truth");
  return static_cast<double>(hit) / static_cast<double>(n);
}

enum class Interp { Nearest, Bilinear };

/// Resamples a map rendered with intrinsics `from` onto a width x height
/// canvas with intrinsics `to` (same optical centre, pixel rays matched by
/// direction). `inside` marks canvas pixels that fall on the source map.
inline ImageD resample(const ImageF& src, const LFIntrinsics& from, const LFIntrinsics& to,
                       int width, int height, Interp interp, Mask* inside = nullptr) {
  ImageD out(width, height, 0.0);
  if (inside) *inside = Mask(width, height, 0);
  const double s = from.f / to.f;
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) {
      const double x = from.u0 + s * (u - to.u0);
      const double y = from.v0 + s * (v - to.v0);
      if (interp == Interp::Nearest) {
        const long iu = std::lround(x), iv = std::lround(y);
        if (iu < 0 || iv < 0 || iu >= src.width() || iv >= src.height()) continue;
        out(u, v) = src(static_cast<int>(iu), static_cast<int>(iv));
      } else {
        if (x < 0.0 || y < 0.0 || x > src.width() - 1 || y > src.height() - 1) continue;
        const int x0 = std::min(static_cast<int>(x), src.width() - 2 < 0 ? 0 : src.width() - 2);
        const int y0 = std::min(static_cast<int>(y), src.height() - 2 < 0 ? 0 : src.height() - 2);
        const int x1 = std::min(x0 + 1, src.width() - 1), y1 = std::min(y0 + 1, src.height() - 1);
        const double fx = x - x0, fy = y - y0;
        out(u, v) = (1 - fy) * ((1 - fx) * src(x0, y0) + fx * src(x1, y0)) +
                    fy * ((1 - fx) * src(x0, y1) + fx * src(x1, y1));
      }
      if (inside) (*inside)(u, v) = 1;
    }
  return out;
}

enum class Domain { Depth, Disparity };

/// Metrics of one run (or of the ground truth against itself).
struct RunMetrics {
  std::string run;
  std::string method;
  std::string scene;
  std::string category;
  double abs_diff = 0.0;
  double rmse = 0.0;
  double delta_125 = 0.0;
  double rmse_intensity = 0.0;
  std::size_t pixel_count = 0;
  std::size_t zero_gt_excluded = 0;
};

struct Aggregate {
  double abs_diff = 0.0;
  double rmse = 0.0;
  double delta_125 = 0.0;
  double rmse_intensity = 0.0;
  std::size_t pixel_count = 0;
  int runs = 0;
};

struct MetricReport {
  Domain domain = Domain::Depth;
  std::vector<RunMetrics> runs;
  /// method -> category -> mean over runs
  std::map<std::string, std::map<std::string, Aggregate>> by_category;
  /// method -> scene -> mean over runs
  std::map<std::string, std::map<std::string, Aggregate>> by_scene;

  void add(const RunMetrics& m) {
    runs.push_back(m);
    for (Aggregate* a : {&by_category[m.method][m.category], &by_scene[m.method][m.scene]}) {
      const double k = a->runs;
      a->abs_diff = (a->abs_diff * k + m.abs_diff) / (k + 1);
      a->rmse = (a->rmse * k + m.rmse) / (k + 1);
      a->delta_125 = (a->delta_125 * k + m.delta_125) / (k + 1);
      a->rmse_intensity = (a->rmse_intensity * k + m.rmse_intensity) / (k + 1);
      a->pixel_count += m.pixel_count;
      a->runs += 1;
    }
  }
};

/// Ground truth of a synthetic dataset, as written by synth::write_dataset.
struct GroundTruth {
  io::ContainerManifest manifest;
  LFIntrinsics canvas_intr;
  ImageF depth;
  ImageF central;
  Mask mask;
  std::string scene;
  std::string category;
};

inline GroundTruth load_ground_truth(const std::filesystem::path& dataset) {
  GroundTruth gt;
  gt.manifest = io::read_manifest(dataset);
  for (const char* f : {"gt_depth.pfm", "gt_central.png", "mask.png"})
    if (!std::filesystem::exists(dataset / f))
      throw DataError("missing " + (dataset / f).string());
  gt.depth = io::read_pfm(dataset / "gt_depth.pfm");
  gt.central = io::read_gray(dataset / "gt_central.png");
  gt.mask = io::read_mask(dataset / "mask.png");
  const Json& extra = gt.manifest.extra;
  try {
    gt.canvas_intr = extra.contains("gt_intrinsics")
                         ? io::intrinsics_from_json(extra.at("gt_intrinsics"))
                         : gt.manifest.intr.padded(gt.manifest.width / 2.0,
                                                   gt.manifest.height / 2.0, gt.manifest.width);
  } catch (const Json::exception& e) {
    throw DataError((dataset / "meta.json").string() + ": bad gt_intrinsics (" + e.what() + ")");
  }
  gt.scene = extra.value("scene", dataset.filename().string());
  gt.category = gt.manifest.motion_gt
                    ? synth::category_name(synth::classify_motion(
                          *gt.manifest.motion_gt, gt.manifest.intr, gt.manifest.width,
                          gt.manifest.height))
                    : "unknown";
  if (gt.depth.width() != gt.central.width() || gt.depth.height() != gt.central.height() ||
      gt.mask.width() != gt.depth.width() || gt.mask.height() != gt.depth.height())
    throw DataError(dataset.string() + ": ground-truth maps differ in size");
  return gt;
}

namespace detail {

inline ImageD to_disparity(const ImageD& depth, const LFIntrinsics& intr) {
  ImageD out(depth.width(), depth.height(), 0.0);
  for (std::size_t i = 0; i < depth.size(); ++i)
    if (depth.data()[i] > 0.0)
      out.data()[i] = point_to_disparity(Point3(0, 0, depth.data()[i]), intr).d;
  return out;
}

/// Metrics of predicted depth/intensity on `canvas` against the ground truth.
inline RunMetrics score(const ImageD& depth, const ImageD& intensity, const Mask& valid,
                        const LFIntrinsics& canvas, const GroundTruth& gt, Domain domain) {
  const int W = depth.width(), H = depth.height();
  Mask in_gt;
  const ImageD gdepth = resample(gt.depth, gt.canvas_intr, canvas, W, H, Interp::Nearest, &in_gt);
  const ImageD gint = resample(gt.central, gt.canvas_intr, canvas, W, H, Interp::Bilinear);
  ImageF gmask_f(gt.mask.width(), gt.mask.height());
  for (std::size_t i = 0; i < gt.mask.size(); ++i) gmask_f.data()[i] = gt.mask.data()[i] ? 1.0f : 0.0f;
  const ImageD gmask = resample(gmask_f, gt.canvas_intr, canvas, W, H, Interp::Nearest);

  Mask m(W, H, 0);
  RunMetrics r;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!in_gt.data()[i] || gmask.data()[i] < 0.5 || !valid.data()[i]) continue;
    if (!(gdepth.data()[i] > 0.0)) {
      ++r.zero_gt_excluded;
      continue;
    }
    m.data()[i] = 1;
    ++r.pixel_count;
  }
  if (r.pixel_count == 0)
    throw ArgumentError("evaluation mask is empty (no valid prediction inside the GT mask)");
  if (domain == Domain::Depth) {
    r.abs_diff = abs_diff(depth, gdepth, m);
    r.rmse = rmse(depth, gdepth, m);
    r.delta_125 = delta_125(depth, gdepth, m);
  } else {
    const ImageD pd = to_disparity(depth, canvas), gd = to_disparity(gdepth, canvas);
    r.abs_diff = abs_diff(pd, gd, m);
    r.rmse = rmse(pd, gd, m);
    // relative threshold is taken on depth in both domains
    r.delta_125 = delta_125(depth, gdepth, m);
  }
  r.rmse_intensity = rmse(intensity, gint, m);
  return r;
}

}  // namespace detail

/// Scores a run directory against its dataset. The comparison runs over
/// the GT visibility mask intersected with valid prediction pixels.
inline RunMetrics evaluate_run(const std::filesystem::path& run_dir,
                               const std::filesystem::path& dataset, Domain domain = Domain::Depth) {
  const GroundTruth gt = load_ground_truth(dataset);
  const Json manifest = run::read_manifest(run_dir);
  LFIntrinsics canvas;
  std::string method;
  try {
    canvas = io::intrinsics_from_json(manifest.at("canvas_intrinsics"));
    method = manifest.at("ablation").get<std::string>();
  } catch (const Json::exception& e) {
    throw DataError((run_dir / run::kManifest).string() + ": " + e.what());
  }
  const ImageF depth_f = run::read_map(run_dir, run::kDepth);
  const ImageF int_f = run::read_map(run_dir, run::kIntensity);
  const Mask valid = run::read_mask_file(run_dir, run::kValid);
  if (int_f.width() != depth_f.width() || int_f.height() != depth_f.height() ||
      valid.width() != depth_f.width() || valid.height() != depth_f.height())
    throw DataError(run_dir.string() + ": compensated maps differ in size");
  ImageD depth(depth_f.width(), depth_f.height()), intensity(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    depth.data()[i] = depth_f.data()[i];
    intensity.data()[i] = int_f.data()[i];
  }
  RunMetrics r = detail::score(depth, intensity, valid, canvas, gt, domain);
  r.run = run_dir.filename().string();
  if (r.run.empty()) r.run = run_dir.parent_path().filename().string();
  r.method = method;
  r.scene = gt.scene;
  r.category = gt.category;
  return r;
}

/// The ground truth scored against itself: all errors zero, delta 1.
inline RunMetrics evaluate_ground_truth(const std::filesystem::path& dataset,
                                        Domain domain = Domain::Depth) {
  const GroundTruth gt = load_ground_truth(dataset);
  ImageD depth(gt.depth.width(), gt.depth.height()), intensity(depth.width(), depth.height());
  Mask valid(depth.width(), depth.height(), 1);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    depth.data()[i] = gt.depth.data()[i];
    intensity.data()[i] = gt.central.data()[i];
  }
  RunMetrics r = detail::score(depth, intensity, valid, gt.canvas_intr, gt, domain);
  r.run = "ground-truth";
  r.method = "gt";
  r.scene = gt.scene;
  r.category = gt.category;
  return r;
}

inline Json to_json(const RunMetrics& m) {
  return {{"run", m.run},
          {"method", m.method},
          {"scene", m.scene},
          {"category", m.category},
          {"abs_diff", m.abs_diff},
          {"rmse", m.rmse},
          {"delta_125", m.delta_125},
          {"rmse_intensity", m.rmse_intensity},
          {"pixel_count", m.pixel_count},
          {"zero_gt_excluded", m.zero_gt_excluded}};
}

inline Json to_json(const Aggregate& a) {
  return {{"abs_diff", a.abs_diff},         {"rmse", a.rmse},
          {"delta_125", a.delta_125},       {"rmse_intensity", a.rmse_intensity},
          {"pixel_count", a.pixel_count},   {"runs", a.runs}};
}

inline Json to_json(const MetricReport& r) {
  Json j;
  j["domain"] = r.domain == Domain::Depth ? "depth" : "disparity";
  j["resampling"] = {{"depth", "nearest"}, {"intensity", "bilinear"}, {"mask", "nearest"}};
  j["delta_threshold"] = "|pred - gt| / gt < 0.25";
  j["runs"] = Json::array();
  for (const auto& m : r.runs) j["runs"].push_back(to_json(m));
  for (const auto& [method, cats] : r.by_category)
    for (const auto& [cat, a] : cats) j["by_category"][method][cat] = to_json(a);
  for (const auto& [method, scenes] : r.by_scene)
    for (const auto& [scene, a] : scenes) j["by_scene"][method][scene] = to_json(a);
  return j;
}

/// Table with one row per method and metric x {GS, slow, fast} columns.
inline std::string to_markdown(const MetricReport& r) {
  static const char* cats[] = {"GS", "slow", "fast"};
  static const char* names[] = {"abs diff", "rmse", "δ<1.25", "rmse (intensity)"};
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "# Evaluation report\n\n";
  out << "Metrics on " << (r.domain == Domain::Depth ? "depth" : "disparity")
      << " over the GT visibility mask intersected with valid prediction pixels. "
         "GT maps are resampled onto the prediction canvas: nearest neighbour for depth, "
         "bilinear for intensity.\n\n";
  out << "| method |";
  for (const char* n : names)
    for (const char* c : cats) out << ' ' << n << ' ' << c << " |";
  out << "\n|---|";
  for (int i = 0; i < 12; ++i) out << "---|";
  out << '\n';
  for (const auto& [method, by_cat] : r.by_category) {
    out << "| " << method << " |";
    for (int k = 0; k < 4; ++k)
      for (const char* c : cats) {
        const auto it = by_cat.find(c);
        if (it == by_cat.end()) {
          out << " - |";
          continue;
        }
        const Aggregate& a = it->second;
        const double v[] = {a.abs_diff, a.rmse, a.delta_125, a.rmse_intensity};
        out << ' ' << v[k] << " |";
      }
    out << '\n';
  }
  out << "\n## Runs\n\n| run | method | scene | category | abs diff | rmse | δ<1.25 | "
         "rmse (intensity) | pixels | zero-GT excluded |\n|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& m : r.runs)
    out << "| " << m.run << " | " << m.method << " | " << m.scene << " | " << m.category << " | "
        << m.abs_diff << " | " << m.rmse << " | " << m.delta_125 << " | " << m.rmse_intensity
        << " | " << m.pixel_count << " | " << m.zero_gt_excluded << " |\n";
  return out.str();
}

inline void write_report(const MetricReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_file(dir / "report.json", to_json(r).dump(2) + "\n");
  io::write_file(dir / "report.md", to_markdown(r));
}

}  // namespace rslf::eval
