#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace dockpilot {

/// Wraps an angle into [-pi, pi). Throws std::invalid_argument on NaN/inf.
double normalize_angle(double theta);

/// Planar rigid pose. The heading is wrapped on every construction, so two
/// poses describing the same transform always compare equal field-wise.
class Pose2 {
 public:
  Pose2() = default;
  Pose2(double x, double y, double theta) : x_(x), y_(y), theta_(normalize_angle(theta)) {}

  static Pose2 identity() { return {}; }

  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }

  /// Row-major 3x3 homogeneous matrix [R p; 0 1].
  std::array<double, 9> matrix() const;
  static Pose2 from_matrix(const std::array<double, 9>& m);

  /// Maps a point expressed in this frame into the parent frame.
  std::array<double, 2> transform_point(double px, double py) const;

  friend bool operator==(const Pose2&, const Pose2&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double theta_ = 0.0;
};

/// Pose of the dock frame expressed in the vessel base frame.
using RelativePose = Pose2;

Pose2 compose(const Pose2& a, const Pose2& b);
Pose2 inverse(const Pose2& a);

/// Delta = inverse(base) * dock.
RelativePose relative_pose(const Pose2& base_in_world, const Pose2& dock_in_world);

/// World pose of the dock given the current base pose and the relative pose.
Pose2 apply_relative(const Pose2& base_in_world, const RelativePose& delta);

/// Largest absolute component difference, headings compared on the circle.
double pose_distance_inf(const Pose2& a, const Pose2& b);

}  // namespace dockpilot
