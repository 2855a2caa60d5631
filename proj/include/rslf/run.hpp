#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rslf/io/cloud_io.hpp"
#include "rslf/io/container.hpp"
#include "rslf/io/pfm.hpp"
#include "rslf/io/png.hpp"
#include "rslf/pipeline.hpp"

namespace rslf::run {

using io::Json;

// Files of a run directory. run.json lists every other file with its hash,
// except timing.json, which holds wall-clock numbers and is never hashed.
inline constexpr const char* kManifest = "run.json";
inline constexpr const char* kLosses = "losses.csv";
inline constexpr const char* kCloud = "cloud.bin";
inline constexpr const char* kCloudJson = "cloud.json";
inline constexpr const char* kStaticCloud = "static_cloud.bin";
inline constexpr const char* kInitDisparity = "init_disparity.pfm";
inline constexpr const char* kInitValid = "init_valid.png";
inline constexpr const char* kIntensity = "compensated_intensity.pfm";
inline constexpr const char* kIntensityPng = "compensated_intensity.png";
inline constexpr const char* kRgbPng = "compensated_rgb.png";
inline constexpr const char* kDisparity = "compensated_disparity.pfm";
inline constexpr const char* kDepth = "compensated_depth.pfm";
inline constexpr const char* kValid = "compensated_valid.png";
inline constexpr const char* kTiming = "timing.json";

inline std::string losses_csv(const LossTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "iter,stage,view_x,view_y,band,loss\n";
  for (const auto& r : trace)
    out << r.iter << ',' << r.stage << ',' << r.view.x << ',' << r.view.y << ',' << r.band << ','
        << r.loss << '\n';
  return out.str();
}

/// Everything about a run that is not in RunResult.
struct RunMeta {
  std::string dataset;
  std::string dataset_hash;
  std::string scene;
  OptimConfig config;
  Json extra = Json::object();
};

inline Json motion_summary(const MotionParams& m) {
  Json j = io::to_json(m);
  j["omega_norm"] = m.omega.norm();
  j["vel_norm"] = m.vel.norm();
  return j;
}

/// Writes the artifacts of `r` into `dir` and returns the manifest that was
/// written to run.json.
inline Json write_run(const std::filesystem::path& dir, const RunResult& r, const RunMeta& meta,
                      const io::LoadedLightField* colour_source = nullptr) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const Compensated& c = r.compensated;

  io::write_file(dir / kLosses, losses_csv(r.trace));
  io::write_cloud(dir / kCloud, r.cloud);
  io::write_file(dir / kCloudJson, io::cloud_to_json(r.cloud).dump(1) + "\n");
  io::write_cloud(dir / kStaticCloud, c.static_cloud);
  io::write_pfm(dir / kInitDisparity, r.disparity.values);
  io::write_mask(dir / kInitValid, r.disparity.valid);
  io::write_pfm(dir / kIntensity, c.intensity);
  io::write_pfm(dir / kDisparity, c.disparity);
  io::write_pfm(dir / kDepth, c.depth);
  io::write_mask(dir / kValid, c.valid);
  io::write_gray16(dir / kIntensityPng, c.intensity);

  std::vector<std::string> files = {kLosses,    kCloud,     kCloudJson, kStaticCloud,
                                    kInitDisparity, kInitValid, kIntensity, kIntensityPng,
                                    kDisparity, kDepth,     kValid};
  if (colour_source && colour_source->lf.channels() == 3) {
    const LightField4D& lf = colour_source->lf;
    const int mid = (lf.angular_size() - 1) / 2;
    GaussianCloud coloured = r.cloud;
    assign_colors(coloured, lf.color_view(mid, mid, 0), lf.color_view(mid, mid, 1),
                  lf.color_view(mid, mid, 2), colour_source->intr);
    GaussianCloud still = c.static_cloud;
    still.rgb = coloured.rgb;
    const auto rgb = render_view_rgb(still, {mid, mid}, lf.angular_size(), c.intensity.width(),
                                     c.intensity.height(), c.canvas_intr, meta.config.splat);
    io::PngRaster png{c.intensity.width(), c.intensity.height(), 3, 16, {}};
    png.samples.resize(3 * c.intensity.size());
    for (std::size_t i = 0; i < c.intensity.size(); ++i)
      for (int k = 0; k < 3; ++k) png.samples[3 * i + k] = io::quantize16(rgb[k].data()[i]);
    io::write_png(dir / kRgbPng, png);
    files.push_back(kRgbPng);
  }

  Json j;
  j["version"] = kVersion;
  j["ablation"] = ablation_name(r.ablation);
  j["dataset"] = {{"path", meta.dataset}, {"hash", meta.dataset_hash}, {"scene", meta.scene}};
  j["config"] = to_json(meta.config);
  j["motion"] = motion_summary(r.motion);
  j["canvas_intrinsics"] = io::to_json(c.canvas_intr);
  j["canvas"] = {{"width", c.intensity.width()}, {"height", c.intensity.height()}};
  j["gaussians"] = r.cloud.size();
  j["init_valid_pixels"] = r.disparity.valid_count();
  double last1 = 0.0, last2 = 0.0;
  for (const auto& rec : r.trace) (rec.stage == 1 ? last1 : last2) = rec.loss;
  j["final_loss"] = {{"stage1", last1}, {"stage2", last2}};
  Json hashes = Json::object();
  for (const auto& f : files) hashes[f] = io::sha256_file(dir / f);
  j["hashes"] = hashes;
  j["extra"] = meta.extra;
  io::write_file(dir / kManifest, j.dump(2) + "\n");
  return j;
}

inline Json read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifest;
  if (!std::filesystem::exists(path)) throw DataError("missing " + path.string());
  const auto bytes = io::read_file(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// Loads a float map or mask of the run, naming the file when it is missing.
inline ImageF read_map(const std::filesystem::path& dir, const char* name) {
  const auto path = dir / name;
  if (!std::filesystem::exists(path)) throw DataError("missing " + path.string());
  return io::read_pfm(path);
}

inline Mask read_mask_file(const std::filesystem::path& dir, const char* name) {
  const auto path = dir / name;
  if (!std::filesystem::exists(path)) throw DataError("missing " + path.string());
  return io::read_mask(path);
}

}  // namespace rslf::run
