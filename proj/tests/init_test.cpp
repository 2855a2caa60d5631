#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "rslf/init.hpp"
#include "rslf/synth.hpp"

namespace rslf {
namespace {

// Static light field of a single noise-textured fronto-parallel plane.
LightField4D plane_lf(double z, int size = 64, int angular = 9) {
  synth::SceneSpec s;
  s.name = "plane";
  s.width = s.height = size;
  s.angular = angular;
  s.intr = synth::desk_intrinsics(size, size);
  s.timing = RSTiming::for_height(size, s.intr.v0);
  s.planes.push_back({Point3(0, 0, z), 2.0, 2.0,
                      synth::Texture{synth::TextureKind::Noise, 0.03 * z, 0.1, 0.9, 2, 11}});
  return synth::render_rslf(s).lf;
}

double median_valid(const DisparityMap& d) {
  std::vector<double> v;
  for (std::size_t i = 0; i < d.values.size(); ++i)
    if (d.valid.data()[i]) v.push_back(d.values.data()[i]);
  EXPECT_FALSE(v.empty());
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

TEST(PlaneSweep, FocalPlaneHasZeroDisparity) {
  const LightField4D lf = plane_lf(1.0);
  const PlaneSweepSettings ps;
  const DisparityMap d = estimate_disparity_central_row(lf, ps);
  EXPECT_NEAR(median_valid(d), 0.0, ps.step());
  EXPECT_GT(d.valid_count(), d.values.size() / 2);
}

TEST(PlaneSweep, KnownDepthMatchesGeometry) {
  const PlaneSweepSettings ps;
  for (double z : {0.7, 1.6}) {
    const LightField4D lf = plane_lf(z);
    const double expected = point_to_disparity(Point3(0, 0, z), synth::desk_intrinsics(64, 64)).d;
    EXPECT_NEAR(median_valid(estimate_disparity_central_row(lf, ps)), expected, ps.step()) << z;
  }
}

TEST(PlaneSweep, TexturelessInputIsFlagged) {
  const LightField4D lf(9, 48, 40, 0.4f);
  const DisparityMap d = estimate_disparity_central_row(lf);
  EXPECT_LT(static_cast<double>(d.valid_count()), 0.05 * d.values.size());
}

TEST(PlaneSweep, ReadsOnlyCentralRowViews) {
  const LightField4D lf = plane_lf(0.8, 32);
  const AccessLog log(lf);
  estimate_disparity_central_row(log);
  ASSERT_FALSE(log.accessed().empty());
  for (const ViewIndex& v : log.accessed()) EXPECT_EQ(v.y, 4);
}

TEST(PlaneSweep, RejectsBadSettings) {
  PlaneSweepSettings ps;
  ps.window = 4;
  EXPECT_THROW(estimate_disparity_central_row(LightField4D(3, 8, 8), ps), ArgumentError);
  ps = {};
  ps.d_min = ps.d_max;
  EXPECT_THROW(ps.validate(), ArgumentError);
}

TEST(FrequencyDensity, ConstantImageIsUniform) {
  const ImageF img(20, 10, 0.3f);
  const ImageD d = frequency_density(img);
  for (double x : d.data()) EXPECT_NEAR(x, 1.0 / 200.0, 1e-15);
}

TEST(FrequencyDensity, EdgeCarriesTheMass) {
  ImageF img(40, 40, 0.1f);
  for (int v = 0; v < 40; ++v)
    for (int u = 20; u < 40; ++u) img(u, v) = 0.9f;
  const ImageD d = frequency_density(img);
  double edge = 0.0, flat = 0.0;
  for (int v = 0; v < 40; ++v) {
    for (int u = 17; u < 23; ++u) edge += d(u, v);
    for (int u = 0; u < 6; ++u) flat += d(u, v);
  }
  EXPECT_GT(edge, 10.0 * flat);
}

TEST(FrequencyDensity, SumsToOne) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> U(0.0f, 1.0f);
  for (int k = 0; k < 5; ++k) {
    ImageF img(33, 17);
    for (auto& x : img.data()) x = U(rng);
    const ImageD d = frequency_density(img);
    EXPECT_NEAR(std::accumulate(d.data().begin(), d.data().end(), 0.0), 1.0, 1e-9);
  }
}

TEST(FillNearestValid, TieGoesToSmallerRowThenColumn) {
  DisparityMap d{ImageD(3, 3, 0.0), Mask(3, 3, 0)};
  // (1,0) and (0,1) are both at distance 1 from (1,1); (1,0) has the smaller row
  d.values(1, 0) = 5.0;
  d.valid(1, 0) = 1;
  d.values(0, 1) = 7.0;
  d.valid(0, 1) = 1;
  const ImageD f = fill_nearest_valid(d);
  EXPECT_EQ(f(1, 1), 5.0);
  EXPECT_EQ(f(0, 0), 5.0);  // (1,0) before (0,1) in row-major order
  EXPECT_EQ(f(0, 2), 7.0);
  EXPECT_THROW(fill_nearest_valid(DisparityMap{ImageD(2, 2), Mask(2, 2, 0)}), DataError);
}

TEST(SeedGaussians, SingleSeedOnOneHotImage) {
  ImageF img(16, 12, 0.0f);
  img(9, 4) = 1.0f;
  DisparityMap d{ImageD(16, 12, 0.25), Mask(16, 12, 1)};
  const LFIntrinsics intr = synth::desk_intrinsics(16, 12);
  const GaussianCloud c = seed_gaussians(img, d, 1, intr);
  ASSERT_EQ(c.size(), 1u);
  const PixelDisparity p = point_to_disparity(c.gaussians[0].center, intr);
  EXPECT_NEAR(p.u, 9.0, 1e-9);
  EXPECT_NEAR(p.v, 4.0, 1e-9);
  EXPECT_EQ(c.gaussians[0].intensity, 1.0);
}

TEST(SeedGaussians, ReproducesSeedPixels) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int W = 24, H = 20;
  ImageF img(W, H);
  DisparityMap d{ImageD(W, H), Mask(W, H, 1)};
  for (std::size_t i = 0; i < img.size(); ++i) {
    img.data()[i] = static_cast<float>(U(rng));
    d.values.data()[i] = 0.3 * U(rng) - 0.1;  // above the far-disparity floor
  }
  const LFIntrinsics intr = synth::desk_intrinsics(W, H);
  const GaussianCloud c = seed_gaussians(img, d, 100, intr, SeedSettings{3});
  ASSERT_EQ(c.size(), 100u);
  c.validate();
  std::set<std::pair<long, long>> sites;
  for (const auto& g : c.gaussians) {
    const PixelDisparity p = point_to_disparity(g.center, intr);
    const long u = std::lround(p.u), v = std::lround(p.v);
    EXPECT_NEAR(p.u, u, 1e-9);
    EXPECT_NEAR(p.v, v, 1e-9);
    EXPECT_NEAR(p.d, d.values(u, v), 1e-9);
    EXPECT_EQ(g.intensity, static_cast<double>(img(u, v)));
    sites.insert({u, v});
  }
  EXPECT_EQ(sites.size(), 100u);  // without replacement
}

TEST(SeedGaussians, DisparityBeyondInfinityIsClamped) {
  const int W = 24, H = 20;
  const ImageF img(W, H, 0.5f);
  const DisparityMap d{ImageD(W, H, -5.0), Mask(W, H, 1)};
  const LFIntrinsics intr = synth::desk_intrinsics(W, H);
  const GaussianCloud c = seed_gaussians(img, d, 10, intr);
  const double floor = -0.95 * intr.beta() / (intr.Pf * intr.w);
  for (const auto& g : c.gaussians) {
    EXPECT_GT(g.center.z(), 0.0);
    EXPECT_NEAR(point_to_disparity(g.center, intr).d, floor, 1e-9);
  }
}

TEST(SeedGaussians, DeterministicForASeed) {
  const LightField4D lf = plane_lf(0.8, 32);
  const DisparityMap d = estimate_disparity_central_row(lf);
  const LFIntrinsics intr = synth::desk_intrinsics(32, 32);
  const GaussianCloud a = seed_gaussians(lf.view(4, 4), d, 200, intr, SeedSettings{5});
  const GaussianCloud b = seed_gaussians(lf.view(4, 4), d, 200, intr, SeedSettings{5});
  const GaussianCloud c = seed_gaussians(lf.view(4, 4), d, 200, intr, SeedSettings{6});
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.gaussians[i].center, b.gaussians[i].center);
    differs |= a.gaussians[i].center != c.gaussians[i].center;
  }
  EXPECT_TRUE(differs);
}

TEST(SeedGaussians, RejectsBadCounts) {
  const ImageF img(4, 4, 0.5f);
  const DisparityMap d{ImageD(4, 4), Mask(4, 4, 1)};
  const LFIntrinsics intr = synth::desk_intrinsics(4, 4);
  EXPECT_THROW(seed_gaussians(img, d, 0, intr), ArgumentError);
  EXPECT_THROW(seed_gaussians(img, d, 17, intr), ArgumentError);
}

TEST(SeedGaussians, DefaultCountScalesWithPixels) {
  EXPECT_EQ(default_gaussian_count(128, 128), 4915);
  EXPECT_EQ(default_gaussian_count(1, 1), 1);
}

// Seeded cloud re-rendered at the central view, before any optimisation.
TEST(SeedGaussians, RerenderMatchesCentralView) {
  for (const std::string& name : synth::preset_names()) {
    synth::SceneSpec spec = synth::make_preset(name, 128, 0);
    const LightField4D lf = synth::render_rslf(spec).lf;
    const DisparityMap d = estimate_disparity_central_row(lf);
    const GaussianCloud cloud = seed_gaussians(lf.view(4, 4), d, default_gaussian_count(128, 128),
                                               spec.intr, SeedSettings{1});
    const ViewRender r = render_view_gs(cloud, {4, 4}, 9, 128, 128, spec.intr);
    double sum = 0.0;
    for (int v = 0; v < 128; ++v)
      for (int u = 0; u < 128; ++u) {
        const double e = r.intensity(u, v) - lf.view(4, 4)(u, v);
        sum += e * e;
      }
    const double rmse = std::sqrt(sum / (128.0 * 128.0));
    EXPECT_LT(rmse, 0.15) << name;
  }
}

}  // namespace
}  // namespace rslf
