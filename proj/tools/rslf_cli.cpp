#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rslf/eval.hpp"
#include "rslf/gradcheck.hpp"
#include "rslf/io/container.hpp"
#include "rslf/parallel.hpp"
#include "rslf/pipeline.hpp"
#include "rslf/run.hpp"
#include "rslf/synth.hpp"

namespace fs = std::filesystem;
using rslf::io::Json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

Json toml_value(const std::string& raw, const std::string& where) {
  const std::string v = trim(raw);
  if (v.empty()) throw rslf::ArgumentError(where + ": missing value");
  if (v.front() == '"' || v.front() == '\'') {
    if (v.size() < 2 || v.back() != v.front())
      throw rslf::ArgumentError(where + ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  try {
    std::size_t used = 0;
    if (v.find_first_of(".eE") == std::string::npos) {
      const long long i = std::stoll(v, &used);
      if (used == v.size()) return i;
    } else {
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    }
  } catch (const std::exception&) {
  }
  return v;  // bare word, e.g. loss_norm = L1
}

// key = value lines, # comments, [section] headers; dotted keys nest.
Json read_toml_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw rslf::DataError("cannot read config " + path.string());
  Json out = Json::object();
  std::string line, section;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const std::string where = path.string() + ":" + std::to_string(lineno);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw rslf::ArgumentError(where + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw rslf::ArgumentError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw rslf::ArgumentError(where + ": empty key");
    if (!section.empty()) key = section + "." + key;
    Json* node = &out;
    std::size_t start = 0;
    for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1)
      node = &(*node)[key.substr(start, dot - start)];
    (*node)[key.substr(start)] = toml_value(line.substr(eq + 1), where);
  }
  return out;
}

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

Json read_json_file(const fs::path& path) {
  if (!fs::exists(path)) throw rslf::DataError("missing " + path.string());
  const auto bytes = rslf::io::read_file(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& e) {
    throw rslf::DataError(path.string() + ": " + e.what());
  }
}

// synth

struct SynthArgs {
  std::string preset;
  std::string scene_file;
  std::string out;
  std::vector<int> motion_index;
  bool all_motions = false;
  int size = 128;
  int angular = 9;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
  if (a.preset.empty() == a.scene_file.empty())
    throw rslf::ArgumentError("synth: give exactly one of --preset or --scene");
  rslf::synth::SceneSpec base;
  if (!a.preset.empty()) {
    base = rslf::synth::make_preset(a.preset, a.size, a.seed, a.angular);
  } else {
    try {
      base = rslf::synth::scene_from_json(read_json_file(a.scene_file));
    } catch (const Json::exception& e) {
      throw rslf::ArgumentError(a.scene_file + ": " + e.what());
    }
  }
  const auto suite = rslf::synth::motion_suite(base.intr, base.width, base.height);
  std::vector<int> indices = a.motion_index;
  if (a.all_motions) {
    indices.clear();
    for (int k = 0; k < static_cast<int>(suite.size()); ++k) indices.push_back(k);
  }
  const bool custom_motion = indices.empty() && !a.scene_file.empty();
  if (indices.empty() && !custom_motion) indices.push_back(0);
  for (int k : indices)
    if (k < 0 || k >= static_cast<int>(suite.size()))
      throw rslf::ArgumentError("--motion-index must be in [0, " +
                                std::to_string(suite.size() - 1) + "]");

  auto emit = [&](rslf::synth::SceneSpec spec, const fs::path& dir) {
    const auto art = rslf::synth::render_rslf(spec);
    rslf::synth::write_dataset(spec, art, dir);
    std::size_t on = 0;
    for (auto b : art.mask.data()) on += b != 0;
    std::cout << dir.string() << "  scene=" << spec.name << " category="
              << rslf::synth::category_name(rslf::synth::classify_motion(
                     spec.motion, spec.intr, spec.width, spec.height))
              << " mask=" << on << "/" << art.mask.size() << "\n";
  };
  if (custom_motion) {
    emit(base, a.out);
    return 0;
  }
  for (int k : indices) {
    rslf::synth::SceneSpec spec = base;
    spec.motion = suite[k];
    char name[64];
    std::snprintf(name, sizeof name, "%s_m%02d", spec.name.c_str(), k);
    emit(spec, indices.size() == 1 ? fs::path(a.out) : fs::path(a.out) / name);
  }
  return 0;
}

// reconstruct

struct ReconstructArgs {
  std::string dataset;
  std::string out = "runs";
  std::string run_dir;
  std::string config_file;
  std::string replay;
  std::string ablation = "full";
  std::optional<int> iters, iters2, gaussians, band;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

int cmd_reconstruct(ReconstructArgs a) {
  rslf::OptimConfig cfg;
  if (!a.replay.empty()) {
    fs::path m = a.replay;
    if (fs::is_directory(m)) m /= rslf::run::kManifest;
    const Json manifest = read_json_file(m);
    try {
      rslf::apply_config(cfg, manifest.at("config"));
      if (a.dataset.empty()) a.dataset = manifest.at("dataset").at("path").get<std::string>();
      a.ablation = manifest.at("ablation").get<std::string>();
      if (manifest.contains("extra") && manifest["extra"].value("deterministic", false))
        a.deterministic = true;
    } catch (const Json::exception& e) {
      throw rslf::DataError(m.string() + ": " + e.what());
    }
  }
  if (a.dataset.empty()) throw rslf::ArgumentError("reconstruct: dataset directory required");
  if (!a.config_file.empty()) rslf::apply_config(cfg, read_toml_config(a.config_file));
  if (a.iters) cfg.iters_stage1 = *a.iters;
  if (a.iters2) cfg.iters_stage2 = *a.iters2;
  if (a.gaussians) cfg.gaussians = *a.gaussians;
  if (a.band) cfg.band_height = *a.band;
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  const rslf::Ablation ablation = rslf::parse_ablation(a.ablation);
  if (a.deterministic) rslf::set_worker_count(1);

  const auto loaded = rslf::io::read_lightfield(a.dataset);
  const std::string dhash = rslf::io::dataset_hash(a.dataset);
  const Json cfg_json = rslf::to_json(cfg);

  fs::path dir = a.run_dir;
  if (dir.empty()) {
    const Json key{{"config", cfg_json}, {"ablation", rslf::ablation_name(ablation)},
                   {"dataset", dhash}};
    const std::string text = key.dump();
    const std::string base =
        timestamp() + "_" + rslf::io::sha256_hex(text.data(), text.size()).substr(0, 8);
    dir = fs::path(a.out) / base;
    for (int k = 2; fs::exists(dir); ++k) dir = fs::path(a.out) / (base + "-" + std::to_string(k));
  }
  fs::create_directories(dir);

  rslf::run::RunMeta meta;
  meta.dataset = a.dataset;
  meta.dataset_hash = dhash;
  meta.scene = loaded.manifest.extra.value("scene", "");
  meta.config = cfg;
  meta.extra = {{"deterministic", a.deterministic}, {"workers", rslf::worker_count()}};
  if (loaded.manifest.motion_gt) meta.extra["motion_gt"] = rslf::io::to_json(*loaded.manifest.motion_gt);

  std::cerr << "reconstruct: " << a.dataset << " ablation=" << rslf::ablation_name(ablation)
            << " -> " << dir.string() << "\n";
  const auto t0 = std::chrono::steady_clock::now();
  rslf::LossTrace partial;
  rslf::RunResult r;
  try {
    r = rslf::run_full(loaded.lf, loaded.intr, loaded.timing, cfg, ablation, &partial);
  } catch (const rslf::NumericalError&) {
    const fs::path trace = dir / rslf::run::kLosses;
    rslf::io::write_file(trace, rslf::run::losses_csv(partial));
    std::cerr << "trace: " << trace.string() << "\n";
    throw;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Json manifest = rslf::run::write_run(dir, r, meta, &loaded);
  rslf::io::write_file(dir / rslf::run::kTiming,
                       Json{{"wall_seconds", seconds}, {"workers", rslf::worker_count()}}.dump(2) +
                           "\n");
  std::cout << dir.string() << "\n";
  std::cout << "motion " << manifest["motion"].dump() << "\n";
  return 0;
}

// evaluate

struct EvaluateArgs {
  std::vector<std::string> runs;
  std::string dataset;
  std::string out = "report";
  std::string domain = "depth";
  bool no_gt_row = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto domain =
      a.domain == "disparity" ? rslf::eval::Domain::Disparity : rslf::eval::Domain::Depth;
  rslf::eval::MetricReport report;
  report.domain = domain;
  std::set<std::string> datasets;
  for (const auto& run : a.runs) {
    std::string ds = a.dataset;
    if (ds.empty()) {
      const Json m = rslf::run::read_manifest(run);
      ds = m.value("/dataset/path"_json_pointer, std::string());
      if (ds.empty())
        throw rslf::DataError(run + ": manifest names no dataset; pass --dataset");
    }
    if (datasets.insert(ds).second && !a.no_gt_row)
      report.add(rslf::eval::evaluate_ground_truth(ds, domain));
    report.add(rslf::eval::evaluate_run(run, ds, domain));
  }
  rslf::eval::write_report(report, a.out);
  std::cout << rslf::eval::to_markdown(report);
  return 0;
}

// gradcheck

int cmd_gradcheck(int n, std::uint64_t seed, double tol, bool corrupt) {
  if (n == 0) {
    std::cerr << "warning: gradcheck with --n 0 checks nothing\n";
    std::cout << "gradcheck: 0 cases, PASS (vacuous)\n";
    return 0;
  }
  if (n < 0) throw rslf::ArgumentError("--n must be >= 0");
  const rslf::GradcheckResult r = rslf::run_gradcheck(n, seed, 1e-4, corrupt ? 1.5 : 1.0);
  const double worst = std::max({r.center, r.sigma, r.intensity, r.omega, r.vel});
  std::printf("gradcheck: %d cases, max relative error\n", r.cases);
  std::printf("  center    %.3e\n  sigma     %.3e\n  intensity %.3e\n  omega     %.3e\n"
              "  vel       %.3e\n",
              r.center, r.sigma, r.intensity, r.omega, r.vel);
  const bool ok = worst < tol;
  std::printf("%s (max %.3e, tolerance %.1e)\n", ok ? "PASS" : "FAIL", worst, tol);
  return ok ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rolling-shutter light field reconstruction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rslf::kVersion));

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "render a synthetic rolling-shutter light field");
  synth->add_option("--preset", sa.preset, "scene preset")
      ->check(CLI::IsMember(rslf::synth::preset_names()));
  synth->add_option("--scene", sa.scene_file, "scene.json instead of a preset")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", sa.out, "output dataset directory")->required();
  synth->add_option("--motion-index", sa.motion_index,
                    "motion(s) from the suite: 0 static, 1-5 slow, 6-10 fast");
  synth->add_flag("--all-motions", sa.all_motions, "render every motion of the suite");
  synth->add_option("--size", sa.size, "image width and height")->check(CLI::Range(8, 4096));
  synth->add_option("--angular", sa.angular, "views per side (odd)")->check(CLI::Range(3, 31));
  synth->add_option("--seed", sa.seed, "texture seed");

  ReconstructArgs ra;
  auto* rec = app.add_subcommand("reconstruct", "run the two-stage pipeline on a dataset");
  rec->add_option("dataset", ra.dataset, "dataset directory");
  rec->add_option("--out", ra.out, "parent of the timestamped run directory");
  rec->add_option("--run-dir", ra.run_dir, "exact run directory");
  rec->add_option("--config", ra.config_file, "key = value config file")->check(CLI::ExistingFile);
  rec->add_option("--replay", ra.replay, "rerun from a run directory or run.json");
  rec->add_option("--ablation", ra.ablation)
      ->check(CLI::IsMember({"full", "no-init", "no-motion", "none"}));
  rec->add_option("--iters", ra.iters, "Stage 1 iterations");
  rec->add_option("--iters2", ra.iters2, "Stage 2 iterations");
  rec->add_option("--gaussians", ra.gaussians, "Gaussian count (0 = resolution default)");
  rec->add_option("--band", ra.band, "band height in rows");
  rec->add_option("--seed", ra.seed);
  rec->add_flag("--deterministic", ra.deterministic, "single-worker reductions");

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "score run directories against ground truth");
  ev->add_option("runs", ea.runs, "run directories")->required();
  ev->add_option("--dataset", ea.dataset, "dataset for every run (default: from each manifest)");
  ev->add_option("--out", ea.out, "report directory");
  ev->add_option("--domain", ea.domain)->check(CLI::IsMember({"depth", "disparity"}));
  ev->add_flag("--no-gt-row", ea.no_gt_row, "omit the ground-truth sanity row");

  int gc_n = 20;
  std::uint64_t gc_seed = 1;
  double gc_tol = 1e-4;
  bool gc_corrupt = false;
  auto* gc = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  gc->add_option("--n", gc_n, "random cases");
  gc->add_option("--seed", gc_seed);
  gc->add_option("--tol", gc_tol, "max relative error");
  gc->add_flag("--corrupt-gradient", gc_corrupt, "scale one analytic gradient (test hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*rec) return cmd_reconstruct(ra);
    if (*ev) return cmd_evaluate(ea);
    if (*gc) return cmd_gradcheck(gc_n, gc_seed, gc_tol, gc_corrupt);
  } catch (const rslf::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rslf::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const rslf::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
