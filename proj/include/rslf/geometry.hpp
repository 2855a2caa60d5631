#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "rslf/error.hpp"
#include "rslf/lightfield.hpp"

namespace rslf {

using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Constant 6-DoF velocity: omega in rad and vel in scene units, both per
/// normalized frame-readout time.
struct MotionParams {
  Vec3 omega = Vec3::Zero();
  Vec3 vel = Vec3::Zero();

  bool is_zero() const { return omega.isZero(0.0) && vel.isZero(0.0); }
  bool finite() const { return omega.allFinite() && vel.allFinite(); }

  /// Non-empty when |omega| leaves the small-rotation regime.
  std::string warning() const {
    if (omega.norm() >= M_PI)
      return "|omega| = " + std::to_string(omega.norm()) +
             " rad per readout exceeds pi";
    return {};
  }

  bool operator==(const MotionParams& o) const {
    return omega == o.omega && vel == o.vel;
  }
};

/// Central-view pixel position and normalized disparity of a 3D point.
struct PixelDisparity {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
};

inline Point3 disparity_to_point(double u, double v, double d,
                                 const LFIntrinsics& intr) {
  const double beta = intr.beta();
  const double denom = d * intr.Pf * intr.w + beta;
  if (!(denom > 0.0))
    throw BehindCameraError(
        "disparity_to_point: disparity " + std::to_string(d) +
            " places the point behind the camera",
        d);
  const double Z = beta * intr.Pf / denom;
  return {Z * (u - intr.u0) / intr.f, Z * (v - intr.v0) / intr.f, Z};
}

inline PixelDisparity point_to_disparity(const Point3& P,
                                         const LFIntrinsics& intr) {
  const double Z = P.z();
  if (!(Z > 0.0))
    throw BehindCameraError("point_to_disparity: Z = " + std::to_string(Z) +
                            " is not in front of the camera");
  return {intr.u0 + intr.f * P.x() / Z, intr.v0 + intr.f * P.y() / Z,
          intr.beta() * (intr.Pf - Z) / (Z * intr.Pf * intr.w)};
}

/// Rows: d(u, v, d) / d(X, Y, Z).
inline Mat3 point_to_disparity_jacobian(const Point3& P,
                                        const LFIntrinsics& intr) {
  const double iz = 1.0 / P.z();
  const double f = intr.f;
  Mat3 J;
  J << f * iz, 0.0, -f * P.x() * iz * iz,  //
      0.0, f * iz, -f * P.y() * iz * iz,   //
      0.0, 0.0, -intr.beta() / intr.w * iz * iz;
  return J;
}

inline Mat3 skew(const Vec3& a) {
  Mat3 S;
  S << 0.0, -a.z(), a.y(),  //
      a.z(), 0.0, -a.x(),   //
      -a.y(), a.x(), 0.0;
  return S;
}

/// Rotation matrix of an axis-angle vector.
inline Mat3 rodrigues(const Vec3& axis_angle) {
  const double phi = axis_angle.norm();
  const Mat3 K = skew(axis_angle);
  if (phi < 1e-12) return Mat3::Identity() + K + 0.5 * K * K;
  const double s = std::sin(phi) / phi;
  const double h = std::sin(0.5 * phi);
  const double c = 2.0 * h * h / (phi * phi);  // (1 - cos phi) / phi^2
  return Mat3::Identity() + s * K + c * K * K;
}

/// Left Jacobian of SO(3): R(theta + delta) ~= exp([J delta]x) R(theta).
inline Mat3 so3_left_jacobian(const Vec3& theta) {
  const double phi = theta.norm();
  const Mat3 K = skew(theta);
  double a;
  double b;
  if (phi < 1e-5) {
    const double p2 = phi * phi;
    a = 0.5 - p2 / 24.0;
    b = 1.0 / 6.0 - p2 / 120.0;
  } else {
    const double h = std::sin(0.5 * phi);
    a = 2.0 * h * h / (phi * phi);
    b = (phi - std::sin(phi)) / (phi * phi * phi);
  }
  return Mat3::Identity() + a * K + b * K * K;
}

/// d(R(theta) x) / d theta.
inline Mat3 rotate_jacobian(const Vec3& theta, const Vec3& rotated) {
  return -skew(rotated) * so3_left_jacobian(theta);
}

/// Position at the time-origin of a point observed at time tau, assuming
/// the scene pose at time t is x -> R(t omega) x + t vel.
inline Point3 deform_to_static(const Point3& P, double tau,
                               const MotionParams& m) {
  return rodrigues(-tau * m.omega) * (P - tau * m.vel);
}

/// Position at time tau_lambda of a point whose time-origin position is Ps.
inline Point3 reimage_at(const Point3& Ps, double tau_lambda,
                         const MotionParams& m) {
  return rodrigues(tau_lambda * m.omega) * Ps + tau_lambda * m.vel;
}

/// reimage_at(deform_to_static(P, tau), tau_lambda) together with its
/// derivatives w.r.t. P, omega and vel.
struct MotionMap {
  Point3 Ps;
  Point3 P_lambda;
  Mat3 dP;
  Mat3 domega;
  Mat3 dvel;
};

inline MotionMap motion_map(const Point3& P, double tau, double tau_lambda,
                            const MotionParams& m) {
  MotionMap out;
  const Vec3 th_s = -tau * m.omega;
  const Vec3 th_l = tau_lambda * m.omega;
  const Mat3 Rs = rodrigues(th_s);
  const Mat3 Rl = rodrigues(th_l);
  const Vec3 q = P - tau * m.vel;
  out.Ps = Rs * q;
  const Vec3 rotated = Rl * out.Ps;
  out.P_lambda = rotated + tau_lambda * m.vel;

  out.dP = Rl * Rs;
  const Mat3 dPs_domega = rotate_jacobian(th_s, out.Ps) * (-tau);
  out.domega = rotate_jacobian(th_l, rotated) * tau_lambda + Rl * dPs_domega;
  out.dvel = tau_lambda * Mat3::Identity() - tau * out.dP;
  return out;
}

}  // namespace rslf
