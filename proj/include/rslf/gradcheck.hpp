#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "rslf/splat.hpp"

namespace rslf {

/// A small random rendering problem: cloud, view, band, motion and a fixed
/// residual image defining the linear functional L = sum(residual * C).
struct GradcheckCase {
  LFIntrinsics intr;
  int angular = 9;
  int width = 48;
  int height = 40;
  GaussianCloud cloud;
  ViewIndex view;
  Band band;
  MotionParams motion;
  RSTiming timing;
  std::vector<double> tau;
  ReimageTime reimage = ReimageTime::Band;
  ImageD residual;
};

inline GradcheckCase random_gradcheck_case(std::mt19937_64& rng, int max_gaussians = 50) {
  GradcheckCase c;
  c.intr.u0 = (c.width - 1) / 2.0;
  c.intr.v0 = (c.height - 1) / 2.0;
  c.intr.w = 6.4;
  c.intr.f = 160.0;
  c.intr.F = c.intr.f * c.intr.w / c.width;
  c.intr.b = 6.4 / (c.intr.F * std::max(2 * c.intr.u0, 2 * c.intr.v0));
  c.timing = RSTiming::for_height(c.height, c.intr.v0);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> view(0, c.angular - 1);
  c.view = {view(rng), view(rng)};
  const int b0 = std::uniform_int_distribution<int>(0, c.height - 8)(rng);
  const int rows = std::uniform_int_distribution<int>(4, 16)(rng);
  c.band = {b0, std::min(c.height, b0 + rows)};

  const int n = std::uniform_int_distribution<int>(1, max_gaussians)(rng);
  c.cloud.background = unit(rng);
  for (int i = 0; i < n; ++i) {
    const double u = -4.0 + (c.width + 8.0) * unit(rng);
    const double v = c.band.begin - 6.0 + (c.band.rows() + 12.0) * unit(rng);
    const double d = -1.0 + 2.0 * unit(rng);
    Gaussian2D g;
    g.center = disparity_to_point(u, v, d, c.intr);
    g.sigma = 1.0 + 3.0 * unit(rng);
    g.intensity = unit(rng);
    c.cloud.gaussians.push_back(g);
  }
  for (int k = 0; k < 3; ++k) {
    c.motion.omega[k] = 0.3 * (2.0 * unit(rng) - 1.0);
    c.motion.vel[k] = 0.05 * (2.0 * unit(rng) - 1.0);
  }
  c.tau.resize(n);
  for (auto& t : c.tau) t = unit(rng) - 0.5;
  c.residual = ImageD(c.width, c.band.rows());
  for (auto& r : c.residual.data()) r = 2.0 * unit(rng) - 1.0;
  c.reimage = unit(rng) < 0.5 ? ReimageTime::Band : ReimageTime::Center;
  return c;
}

/// Worst normwise relative error per parameter class, over all cases.
struct GradcheckResult {
  int cases = 0;
  double center = 0.0;
  double sigma = 0.0;
  double intensity = 0.0;
  double omega = 0.0;
  double vel = 0.0;

  double worst() const { return std::max({center, sigma, intensity, omega, vel}); }
};

namespace detail {

inline double band_functional(const GradcheckCase& c, const GaussianCloud& cloud,
                              const MotionParams& m) {
  const RSMotion rs{m, c.timing, c.tau, c.reimage};
  const RenderedBand rb =
      render_band(cloud, c.view, c.angular, c.band, c.width, c.height, &rs, c.intr);
  double L = 0.0;
  for (std::size_t i = 0; i < rb.intensity.size(); ++i)
    L += c.residual.data()[i] * rb.intensity.data()[i];
  return L;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
  return std::sqrt(diff) / denom;
}

}  // namespace detail

/// Compares backward_band against central finite differences of the forward
/// renderer on one case. Steps are h in normalized units: the centre in its
/// (u, v, disparity) pixel coordinates, velocity in pixels of image motion,
/// rotation in pixels of displacement at half a readout. `corrupt_scale` multiplies
/// the analytic sigma gradient (negative control).
inline GradcheckResult gradcheck_case(const GradcheckCase& c, double h = 1e-4,
                                      double corrupt_scale = 1.0) {
  const RSMotion rs{c.motion, c.timing, c.tau, c.reimage};
  const BandGradients g = backward_band(c.cloud, c.view, c.angular, c.band, c.width,
                                        c.height, &rs, c.intr, c.residual);
  const std::size_t n = c.cloud.size();
  const double f = c.intr.f;

  auto fd = [&](auto&& perturb, double step) {
    GaussianCloud a = c.cloud, b = c.cloud;
    MotionParams ma = c.motion, mb = c.motion;
    perturb(a, ma, +step);
    perturb(b, mb, -step);
    return (detail::band_functional(c, a, ma) - detail::band_functional(c, b, mb)) /
           (2.0 * step);
  };

  std::vector<double> an_c, fd_c, an_s, fd_s, an_i, fd_i, an_o, fd_o, an_v, fd_v;
  double zmean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point3& P = c.cloud.gaussians[i].center;
    zmean += P.z() / n;
    // centre perturbed in its own (u, v, d) pixel coordinates
    const PixelDisparity p0 = point_to_disparity(P, c.intr);
    const Vec3 g_uvd = point_to_disparity_jacobian(P, c.intr).transpose().inverse() * g.center[i];
    for (int k = 0; k < 3; ++k) {
      an_c.push_back(g_uvd[k] * h);
      fd_c.push_back(fd([&](GaussianCloud& cl, MotionParams&, double s) {
        double q[3] = {p0.u, p0.v, p0.d};
        q[k] += s;
        cl.gaussians[i].center = disparity_to_point(q[0], q[1], q[2], c.intr);
      }, h) * h);
    }
    an_s.push_back(g.sigma[i] * corrupt_scale * h);
    fd_s.push_back(fd([&](GaussianCloud& cl, MotionParams&, double s) {
      cl.gaussians[i].sigma += s;
    }, h) * h);
    an_i.push_back(g.intensity[i] * h);
    fd_i.push_back(fd([&](GaussianCloud& cl, MotionParams&, double s) {
      cl.gaussians[i].intensity += s;
    }, h) * h);
  }
  for (int k = 0; k < 3; ++k) {
    const double so = h / (0.5 * f);
    an_o.push_back(g.omega[k] * so);
    fd_o.push_back(fd([&](GaussianCloud&, MotionParams& m, double s) { m.omega[k] += s; }, so) * so);
    const double sv = h * zmean / (0.5 * f);
    an_v.push_back(g.vel[k] * sv);
    fd_v.push_back(fd([&](GaussianCloud&, MotionParams& m, double s) { m.vel[k] += s; }, sv) * sv);
  }
  GradcheckResult r;
  r.cases = 1;
  r.center = detail::relative_error(an_c, fd_c);
  r.sigma = detail::relative_error(an_s, fd_s);
  r.intensity = detail::relative_error(an_i, fd_i);
  r.omega = detail::relative_error(an_o, fd_o);
  r.vel = detail::relative_error(an_v, fd_v);
  return r;
}

inline GradcheckResult run_gradcheck(int cases, std::uint64_t seed, double h = 1e-4,
                                     double corrupt_scale = 1.0, int max_gaussians = 50) {
  std::mt19937_64 rng(seed);
  GradcheckResult total;
  for (int i = 0; i < cases; ++i) {
    const GradcheckCase c = random_gradcheck_case(rng, max_gaussians);
    const GradcheckResult r = gradcheck_case(c, h, corrupt_scale);
    total.cases += 1;
    total.center = std::max(total.center, r.center);
    total.sigma = std::max(total.sigma, r.sigma);
    total.intensity = std::max(total.intensity, r.intensity);
    total.omega = std::max(total.omega, r.omega);
    total.vel = std::max(total.vel, r.vel);
  }
  return total;
}

}  // namespace rslf
