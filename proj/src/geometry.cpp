#include "dockpilot/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace dockpilot {

double normalize_angle(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("normalize_angle: non-finite angle");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (theta >= -std::numbers::pi && theta < std::numbers::pi) return theta;
  double wrapped = std::fmod(theta + std::numbers::pi, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  wrapped -= std::numbers::pi;
  // fmod rounding can land exactly on +pi
  if (wrapped >= std::numbers::pi) wrapped -= kTwoPi;
  return wrapped;
}

std::array<double, 9> Pose2::matrix() const {
  const double c = std::cos(theta_), s = std::sin(theta_);
  return {c, -s, x_, s, c, y_, 0.0, 0.0, 1.0};
}

Pose2 Pose2::from_matrix(const std::array<double, 9>& m) {
  return {m[2], m[5], std::atan2(m[3], m[0])};
}

std::array<double, 2> Pose2::transform_point(double px, double py) const {
  const double c = std::cos(theta_), s = std::sin(theta_);
  return {x_ + c * px - s * py, y_ + s * px + c * py};
}

Pose2 compose(const Pose2& a, const Pose2& b) {
  const auto p = a.transform_point(b.x(), b.y());
  return {p[0], p[1], a.theta() + b.theta()};
}

Pose2 inverse(const Pose2& a) {
  const double c = std::cos(a.theta()), s = std::sin(a.theta());
  return {-(c * a.x() + s * a.y()), s * a.x() - c * a.y(), -a.theta()};
}

RelativePose relative_pose(const Pose2& base_in_world, const Pose2& dock_in_world) {
  return compose(inverse(base_in_world), dock_in_world);
}

Pose2 apply_relative(const Pose2& base_in_world, const RelativePose& delta) {
  return compose(base_in_world, delta);
}

double pose_distance_inf(const Pose2& a, const Pose2& b) {
  const double dth = std::abs(normalize_angle(a.theta() - b.theta()));
  return std::max({std::abs(a.x() - b.x()), std::abs(a.y() - b.y()), dth});
}

}  // namespace dockpilot
