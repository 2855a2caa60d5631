#include <random>

#include <gtest/gtest.h>

#include "rslf/geometry.hpp"

namespace rslf {
namespace {

LFIntrinsics desk_intrinsics() { return {}; }

TEST(DisparityToPoint, FocalPlaneAtZeroDisparity) {
  const LFIntrinsics intr = desk_intrinsics();
  for (double u : {0.0, 17.0, 100.5}) {
    const Point3 P = disparity_to_point(u, 40.0, 0.0, intr);
    EXPECT_EQ(P.z(), intr.Pf);
  }
}

TEST(DisparityToPoint, PrincipalPointMapsToAxis) {
  const LFIntrinsics intr = desk_intrinsics();
  for (double d : {-0.7, 0.0, 0.4, 1.5}) {
    const Point3 P = disparity_to_point(intr.u0, intr.v0, d, intr);
    EXPECT_EQ(P.x(), 0.0);
    EXPECT_EQ(P.y(), 0.0);
  }
}

TEST(DisparityToPoint, BehindCameraCarriesDisparity) {
  const LFIntrinsics intr = desk_intrinsics();
  const double d_bad = -intr.beta() / (intr.Pf * intr.w) - 0.1;
  try {
    disparity_to_point(1.0, 1.0, d_bad, intr);
    FAIL();
  } catch (const BehindCameraError& e) {
    EXPECT_EQ(e.disparity(), d_bad);
  }
  EXPECT_THROW(point_to_disparity(Point3(0, 0, -1), intr), BehindCameraError);
  EXPECT_THROW(point_to_disparity(Point3(0, 0, 0), intr), BehindCameraError);
}

TEST(PointToDisparity, FocalPlaneAndFarPoints) {
  const LFIntrinsics intr = desk_intrinsics();
  const PixelDisparity p = point_to_disparity(Point3(0, 0, intr.Pf), intr);
  EXPECT_EQ(p.u, intr.u0);
  EXPECT_EQ(p.v, intr.v0);
  EXPECT_EQ(p.d, 0.0);
  EXPECT_LT(point_to_disparity(Point3(0.1, 0, 2.0 * intr.Pf), intr).d, 0.0);
  EXPECT_GT(point_to_disparity(Point3(0.1, 0, 0.5 * intr.Pf), intr).d, 0.0);
}

TEST(DisparityToPoint, RoundTripProperty) {
  const LFIntrinsics intr = desk_intrinsics();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pix(-20.0, 150.0);
  std::uniform_real_distribution<double> disp(-0.95, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double u = pix(rng), v = pix(rng), d = disp(rng);
    const PixelDisparity back = point_to_disparity(disparity_to_point(u, v, d, intr), intr);
    worst = std::max({worst, std::abs(back.u - u), std::abs(back.v - v), std::abs(back.d - d)});
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(PointToDisparity, JacobianMatchesFiniteDifferences) {
  const LFIntrinsics intr = desk_intrinsics();
  const Point3 P(0.13, -0.2, 0.8);
  const Mat3 J = point_to_disparity_jacobian(P, intr);
  const double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    Point3 a = P, b = P;
    a[c] += h;
    b[c] -= h;
    const auto pa = point_to_disparity(a, intr), pb = point_to_disparity(b, intr);
    EXPECT_NEAR(J(0, c), (pa.u - pb.u) / (2 * h), 1e-5);
    EXPECT_NEAR(J(1, c), (pa.v - pb.v) / (2 * h), 1e-5);
    EXPECT_NEAR(J(2, c), (pa.d - pb.d) / (2 * h), 1e-5);
  }
}

TEST(Rodrigues, ZeroIsIdentity) { EXPECT_EQ(rodrigues(Vec3::Zero()), Mat3::Identity()); }

TEST(Rodrigues, QuarterTurnAboutZ) {
  const Vec3 r = rodrigues(Vec3(0, 0, M_PI / 2)) * Vec3(1, 0, 0);
  EXPECT_NEAR((r - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
}

TEST(Rodrigues, ProperRotationProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  for (int i = 0; i < 500; ++i) {
    const Mat3 R = rodrigues(Vec3(dist(rng), dist(rng), dist(rng)));
    EXPECT_LT((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-10);
  }
}

TEST(Rodrigues, FirstOrderNearZero) {
  const Vec3 e = Vec3(1, -2, 0.5).normalized();
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    const double err = (rodrigues(eps * e) - (Mat3::Identity() + eps * skew(e))).norm();
    EXPECT_LE(err, 1.0 * eps * eps);
  }
  // below the series threshold the result is still a rotation
  const Mat3 R = rodrigues(Vec3(1e-13, 0, 0));
  EXPECT_LT((R.transpose() * R - Mat3::Identity()).norm(), 1e-15);
}

TEST(DeformToStatic, IdentityCases) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const Point3 P(0.3, -0.1, 1.2);
  MotionParams m{Vec3(dist(rng), dist(rng), dist(rng)), Vec3(dist(rng), dist(rng), dist(rng))};
  EXPECT_EQ(deform_to_static(P, 0.37, MotionParams{}), P);
  EXPECT_EQ(deform_to_static(P, 0.0, m), P);
  EXPECT_EQ(reimage_at(P, 0.0, m), P);
  EXPECT_EQ(reimage_at(P, -0.2, MotionParams{}), P);
}

TEST(DeformToStatic, PureTranslation) {
  MotionParams m{Vec3::Zero(), Vec3(1, 0, 0)};
  const Point3 Ps = deform_to_static(Point3(0, 0, 2), 0.5, m);
  EXPECT_NEAR((Ps - Point3(-0.5, 0, 2)).norm(), 0.0, 1e-15);
}

TEST(ReimageAt, InvertsDeformationAtEqualTime) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Point3 P(dist(rng), dist(rng), 1.0 + dist(rng));
    const double tau = 0.5 * dist(rng);
    MotionParams m{Vec3(dist(rng), dist(rng), dist(rng)), Vec3(dist(rng), dist(rng), dist(rng))};
    worst = std::max(worst, (reimage_at(deform_to_static(P, tau, m), tau, m) - P).norm());
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(ReimageAt, SingleAxisRotationComposes) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 axis = Vec3(dist(rng), dist(rng), dist(rng)).normalized();
    MotionParams m{axis * 2.0 * dist(rng), Vec3::Zero()};
    const Point3 P(dist(rng), dist(rng), 1.5);
    const double tau = 0.5 * dist(rng), tau2 = 0.5 * dist(rng);
    const Point3 got = reimage_at(deform_to_static(P, tau, m), tau2, m);
    const Point3 expect = rodrigues((tau2 - tau) * m.omega) * P;
    EXPECT_LT((got - expect).norm(), 1e-12);
  }
}

TEST(MotionMap, JacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Point3 P(dist(rng), dist(rng), 1.5 + dist(rng));
    const double tau = 0.5 * dist(rng), tl = 0.5 * dist(rng);
    MotionParams m{Vec3(dist(rng), dist(rng), dist(rng)), Vec3(dist(rng), dist(rng), dist(rng))};
    if (trial == 0) m.omega.setZero();
    const MotionMap mm = motion_map(P, tau, tl, m);
    EXPECT_LT((mm.P_lambda - reimage_at(deform_to_static(P, tau, m), tl, m)).norm(), 1e-14);
    for (int c = 0; c < 3; ++c) {
      MotionParams a = m, b = m;
      a.omega[c] += h;
      b.omega[c] -= h;
      const Vec3 fo = (motion_map(P, tau, tl, a).P_lambda - motion_map(P, tau, tl, b).P_lambda) / (2 * h);
      EXPECT_LT((fo - mm.domega.col(c)).norm(), 1e-7);
      a = m;
      b = m;
      a.vel[c] += h;
      b.vel[c] -= h;
      const Vec3 fv = (motion_map(P, tau, tl, a).P_lambda - motion_map(P, tau, tl, b).P_lambda) / (2 * h);
      EXPECT_LT((fv - mm.dvel.col(c)).norm(), 1e-7);
      Point3 pa = P, pb = P;
      pa[c] += h;
      pb[c] -= h;
      const Vec3 fp = (motion_map(pa, tau, tl, m).P_lambda - motion_map(pb, tau, tl, m).P_lambda) / (2 * h);
      EXPECT_LT((fp - mm.dP.col(c)).norm(), 1e-7);
    }
  }
}

TEST(MotionMap, ZeroMotionIsExactIdentity) {
  const Point3 P(-0.31, 0.77, 1.234);
  const MotionMap mm = motion_map(P, 0.3, -0.2, MotionParams{});
  EXPECT_EQ(mm.P_lambda, P);
}

TEST(MotionParams, WarnsOutsideSmallRotationRegime) {
  EXPECT_TRUE(MotionParams{}.warning().empty());
  EXPECT_FALSE((MotionParams{Vec3(4, 0, 0), Vec3::Zero()}).warning().empty());
}

}  // namespace
}  // namespace rslf
