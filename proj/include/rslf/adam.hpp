#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rslf/error.hpp"

namespace rslf {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> u;
  long t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), u(n, 0.0) {}
};

/// One bias-corrected Adam update in place. `lr` holds one step size per
/// entry so parameter classes can use different rates.
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state, std::span<const double> lr,
                      const AdamHyper& h = {}) {
  const std::size_t n = params.size();
  if (grads.size() != n || lr.size() != n || state.m.size() != n || state.u.size() != n)
    throw ArgumentError("adam_step: shape mismatch (params " + std::to_string(n) +
                        ", grads " + std::to_string(grads.size()) + ", lr " +
                        std::to_string(lr.size()) + ", state " +
                        std::to_string(state.m.size()) + ")");
  ++state.t;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.u[i] = h.beta2 * state.u[i] + (1.0 - h.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double uhat = state.u[i] / c2;
    params[i] -= lr[i] * mhat / (std::sqrt(uhat) + h.eps);
  }
}

}  // namespace rslf
