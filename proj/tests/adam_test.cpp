#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rslf/adam.hpp"

namespace rslf {
namespace {

TEST(AdamStep, ZeroGradientFreshStateLeavesParams) {
  std::vector<double> p{1.0, -2.0, 3.5};
  const std::vector<double> g(3, 0.0), lr(3, 0.1);
  AdamState st(3);
  adam_step(p, g, st, lr);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.5}));
}

TEST(AdamStep, ConstantGradientStepTendsToLearningRate) {
  std::vector<double> p{0.0, 0.0};
  const std::vector<double> g{0.37, -12.0}, lr{1e-3, 1e-3};
  AdamState st(2);
  std::vector<double> prev = p;
  for (int t = 1; t <= 1000; ++t) {
    prev = p;
    adam_step(p, g, st, lr);
  }
  EXPECT_NEAR(p[0] - prev[0], -1e-3, 1e-5);
  EXPECT_NEAR(p[1] - prev[1], 1e-3, 1e-5);
}

TEST(AdamStep, MatchesReferenceImplementation) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  const int n = 7;
  std::vector<double> p(n), q(n), lr(n);
  for (int i = 0; i < n; ++i) {
    p[i] = q[i] = nd(rng);
    lr[i] = 1e-3 * (i + 1);
  }
  AdamState st(n);
  // reference: textbook Adam with explicit powers
  std::vector<double> m(n, 0.0), v(n, 0.0);
  for (int t = 1; t <= 50; ++t) {
    std::vector<double> g(n);
    for (auto& x : g) x = nd(rng);
    adam_step(p, g, st, lr);
    for (int i = 0; i < n; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      q[i] -= lr[i] * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int i = 0; i < n; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
}

TEST(AdamStep, ShapeMismatchIsArgumentError) {
  std::vector<double> p(3), g(2), lr(3);
  AdamState st(3);
  EXPECT_THROW(adam_step(p, g, st, lr), ArgumentError);
}

}  // namespace
}  // namespace rslf
