#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "rslf/eval.hpp"
#include "rslf/synth.hpp"

namespace rslf::eval {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("rslf_eval_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ImageD row(std::initializer_list<double> v) {
  ImageD im(static_cast<int>(v.size()), 1);
  std::copy(v.begin(), v.end(), im.data().begin());
  return im;
}

TEST(Metrics, TwoElementHandValues) {
  const ImageD pred = row({1, 2}), gt = row({1, 4});
  const Mask all(2, 1, 1);
  EXPECT_DOUBLE_EQ(abs_diff(pred, gt, all), 1.0);
  EXPECT_DOUBLE_EQ(rmse(pred, gt, all), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(delta_125(pred, gt, all), 0.5);
}

TEST(Metrics, ThresholdIsStrictRelativeDifference) {
  // |1.25 - 1| / 1 = 0.25 is not below 0.25; 0.8 vs 1 is 0.2
  const Mask all(2, 1, 1);
  EXPECT_DOUBLE_EQ(delta_125(row({1.25, 0.8}), row({1, 1}), all), 0.5);
}

TEST(Metrics, ValuesOutsideMaskAreIgnored) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  ImageD pred(16, 8), gt(16, 8);
  Mask m(16, 8, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred.data()[i] = U(rng);
    gt.data()[i] = U(rng);
    m.data()[i] = (i % 3) != 0;
  }
  const double a = abs_diff(pred, gt, m), r = rmse(pred, gt, m), d = delta_125(pred, gt, m);
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (!m.data()[i]) {
      pred.data()[i] = 1e6 * U(rng);
      gt.data()[i] = -U(rng);
    }
  EXPECT_EQ(abs_diff(pred, gt, m), a);
  EXPECT_EQ(rmse(pred, gt, m), r);
  EXPECT_EQ(delta_125(pred, gt, m), d);
}

TEST(Metrics, PermutationInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  const int n = 64;
  ImageD pred(n, 1), gt(n, 1);
  for (int i = 0; i < n; ++i) {
    pred(i, 0) = U(rng);
    gt(i, 0) = U(rng);
  }
  const Mask all(n, 1, 1);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  ImageD p2(n, 1), g2(n, 1);
  for (int i = 0; i < n; ++i) {
    p2(i, 0) = pred(perm[i], 0);
    g2(i, 0) = gt(perm[i], 0);
  }
  EXPECT_NEAR(abs_diff(p2, g2, all), abs_diff(pred, gt, all), 1e-14);
  EXPECT_NEAR(rmse(p2, g2, all), rmse(pred, gt, all), 1e-14);
  EXPECT_EQ(delta_125(p2, g2, all), delta_125(pred, gt, all));
}

TEST(Metrics, ScaleProperties) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  ImageD pred(32, 4), gt(32, 4);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred.data()[i] = U(rng);
    gt.data()[i] = U(rng);
  }
  const Mask all(32, 4, 1);
  for (double alpha : {0.5, 2.0, 8.0}) {  // powers of two keep the ratios exact
    ImageD ps = pred, gs = gt;
    for (auto& v : ps.data()) v *= alpha;
    for (auto& v : gs.data()) v *= alpha;
    EXPECT_EQ(delta_125(ps, gs, all), delta_125(pred, gt, all));
    EXPECT_NEAR(abs_diff(ps, gs, all), alpha * abs_diff(pred, gt, all), 1e-12);
    EXPECT_NEAR(rmse(ps, gs, all), alpha * rmse(pred, gt, all), 1e-12);
  }
  ImageD ps = pred, gs = gt;
  for (auto& v : ps.data()) v *= 3.7;
  for (auto& v : gs.data()) v *= 3.7;
  EXPECT_NEAR(abs_diff(ps, gs, all), 3.7 * abs_diff(pred, gt, all), 1e-12);
}

TEST(Metrics, ZeroGroundTruthExcludedFromDelta) {
  std::size_t excluded = 0;
  EXPECT_DOUBLE_EQ(delta_125(row({1, 5, 2}), row({1, 0, 4}), Mask(3, 1, 1), &excluded), 0.5);
  EXPECT_EQ(excluded, 1u);
}

TEST(Metrics, BadInputsRejected) {
  EXPECT_THROW(abs_diff(row({1, 2}), row({1, 2, 3}), Mask(3, 1, 1)), ArgumentError);
  EXPECT_THROW(rmse(row({1, 2}), row({1, 2}), Mask(2, 1, 0)), ArgumentError);
  EXPECT_THROW(delta_125(row({1, 2}), row({0, 0}), Mask(2, 1, 1)), ArgumentError);
}

TEST(Resample, SameIntrinsicsIsIdentity) {
  ImageF src(12, 9);
  for (std::size_t i = 0; i < src.size(); ++i) src.data()[i] = static_cast<float>(i) * 0.25f;
  LFIntrinsics intr;
  intr.u0 = 5.5;
  intr.v0 = 4.0;
  for (Interp k : {Interp::Nearest, Interp::Bilinear}) {
    Mask inside;
    const ImageD out = resample(src, intr, intr, 12, 9, k, &inside);
    for (std::size_t i = 0; i < src.size(); ++i) {
      EXPECT_EQ(out.data()[i], static_cast<double>(src.data()[i]));
      EXPECT_EQ(inside.data()[i], 1);
    }
  }
}

TEST(Resample, CentralWindowOfDoubleCanvas) {
  // 2W x 2H canvas padded by W/2, H/2: the W x H prediction grid reads the
  // middle of it
  const int W = 8, H = 6;
  LFIntrinsics small;
  small.f = 10.0;
  small.u0 = 3.5;
  small.v0 = 2.5;
  const LFIntrinsics big = small.padded(W / 2.0, H / 2.0, W);
  ImageF src(2 * W, 2 * H);
  for (int v = 0; v < 2 * H; ++v)
    for (int u = 0; u < 2 * W; ++u) src(u, v) = static_cast<float>(100 * v + u);
  const ImageD out = resample(src, big, small, W, H, Interp::Nearest);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) EXPECT_EQ(out(u, v), src(u + W / 2, v + H / 2));
}

TEST(Resample, BilinearMidpoint) {
  ImageF src(2, 1);
  src(0, 0) = 1.0f;
  src(1, 0) = 3.0f;
  LFIntrinsics from, to;
  from.u0 = 0.0;
  from.v0 = 0.0;
  to.u0 = -0.5;  // pixel 0 of the target sits at x = 0.5 of the source
  to.v0 = 0.0;
  const ImageD out = resample(src, from, to, 1, 1, Interp::Bilinear);
  EXPECT_DOUBLE_EQ(out(0, 0), 2.0);
}

class SmallDataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    synth::SceneSpec spec = synth::make_preset("sphere", 32, 1, 3);
    spec.motion = synth::motion_suite(spec.intr, 32, 32)[8];
    const auto art = synth::render_rslf(spec);
    synth::write_dataset(spec, art, dataset());
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path dataset() { return dir_->path() / "data"; }

  // a run directory whose compensated maps are the ground truth itself
  static fs::path perfect_run(const fs::path& where) {
    const GroundTruth gt = load_ground_truth(dataset());
    fs::create_directories(where);
    io::write_pfm(where / run::kDepth, gt.depth);
    io::write_pfm(where / run::kIntensity, gt.central);
    io::write_mask(where / run::kValid, Mask(gt.depth.width(), gt.depth.height(), 1));
    io::Json j{{"ablation", "full"}, {"canvas_intrinsics", io::to_json(gt.canvas_intr)}};
    io::write_file(where / run::kManifest, j.dump(2));
    return where;
  }

  static TempDir* dir_;
};
TempDir* SmallDataset::dir_ = nullptr;

TEST_F(SmallDataset, GroundTruthAgainstItself) {
  const RunMetrics m = evaluate_ground_truth(dataset());
  EXPECT_EQ(m.abs_diff, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.delta_125, 1.0);
  EXPECT_EQ(m.rmse_intensity, 0.0);
  EXPECT_GT(m.pixel_count, 0u);
  EXPECT_EQ(m.category, "fast");
  EXPECT_EQ(m.scene, "sphere");
}

TEST_F(SmallDataset, PerfectRunScoresZero) {
  TempDir tmp;
  const RunMetrics m = evaluate_run(perfect_run(tmp.path() / "run"), dataset());
  EXPECT_EQ(m.abs_diff, 0.0);
  EXPECT_EQ(m.delta_125, 1.0);
  EXPECT_EQ(m.method, "full");
  const RunMetrics md = evaluate_run(tmp.path() / "run", dataset(), Domain::Disparity);
  EXPECT_EQ(md.abs_diff, 0.0);
}

TEST_F(SmallDataset, MaskShrinksUnderMotion) {
  const GroundTruth gt = load_ground_truth(dataset());
  std::size_t on = 0;
  for (auto b : gt.mask.data()) on += b != 0;
  EXPECT_GT(on, 0u);
  EXPECT_LT(on, gt.mask.size());
}

TEST_F(SmallDataset, InvalidPredictionPixelsAreSkipped) {
  TempDir tmp;
  const fs::path r = perfect_run(tmp.path() / "run");
  ImageF depth = io::read_pfm(r / run::kDepth);
  Mask valid(depth.width(), depth.height(), 1);
  for (int v = 0; v < depth.height(); ++v)
    for (int u = 0; u < depth.width() / 2; ++u) {
      depth(u, v) = 1e3f;
      valid(u, v) = 0;
    }
  io::write_pfm(r / run::kDepth, depth);
  io::write_mask(r / run::kValid, valid);
  const RunMetrics m = evaluate_run(r, dataset());
  EXPECT_EQ(m.abs_diff, 0.0);
  EXPECT_LT(m.pixel_count, evaluate_ground_truth(dataset()).pixel_count);
}

TEST_F(SmallDataset, MissingArtifactNamesTheFile) {
  TempDir tmp;
  const fs::path r = perfect_run(tmp.path() / "run");
  fs::remove(r / run::kValid);
  try {
    evaluate_run(r, dataset());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(run::kValid), std::string::npos);
  }
}

TEST_F(SmallDataset, ReportIsIdempotent) {
  TempDir tmp;
  MetricReport rep;
  rep.add(evaluate_ground_truth(dataset()));
  rep.add(evaluate_run(perfect_run(tmp.path() / "run"), dataset()));
  write_report(rep, tmp.path() / "a");
  write_report(rep, tmp.path() / "b");
  EXPECT_EQ(io::read_file(tmp.path() / "a" / "report.json"),
            io::read_file(tmp.path() / "b" / "report.json"));
  EXPECT_EQ(io::read_file(tmp.path() / "a" / "report.md"),
            io::read_file(tmp.path() / "b" / "report.md"));
  const auto md = io::read_file(tmp.path() / "a" / "report.md");
  const std::string text(md.begin(), md.end());
  EXPECT_NE(text.find("| gt |"), std::string::npos);
  EXPECT_NE(text.find("| full |"), std::string::npos);
}

}  // namespace
}  // namespace rslf::eval
