#pragma once
// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dockpilot/net.hpp"

namespace oracle {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t params = 0;
};

/// Central finite differences over every parameter of a double network.
inline GradCheck finite_difference(const dockpilot::Network<double>& net, const std::vector<double>& images,
                                   const std::vector<double>& targets, std::size_t batch, bool training,
                                   std::uint64_t seed, double eps = 1e-4) {
  using dockpilot::Exec;
  std::vector<double> grad(net.param_count()), scratch(net.param_count());
  net.loss_and_gradient(images, targets, batch, training, seed, grad, Exec::serial_reference);
  dockpilot::Network<double> probe = net;
  GradCheck out;
  out.params = net.param_count();
  for (std::size_t j = 0; j < net.param_count(); ++j) {
    const double orig = probe.params()[j];
    probe.params()[j] = orig + eps;
    const double up = probe.loss_and_gradient(images, targets, batch, training, seed, scratch, Exec::serial_reference);
    probe.params()[j] = orig - eps;
    const double down = probe.loss_and_gradient(images, targets, batch, training, seed, scratch, Exec::serial_reference);
    probe.params()[j] = orig;
    const double numeric = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(grad[j]), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(numeric - grad[j]) / denom);
  }
  return out;
}

/// Scalar double loop: mean over batch and channels of squared differences.
inline double mse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / double(a.size());
}

/// Closed-form least squares on (x, y).
inline std::pair<double, double> ols(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

}  // namespace oracle
