#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dockpilot/camera.hpp"
#include "dockpilot/control.hpp"
#include "dockpilot/net.hpp"
#include "dockpilot/plant.hpp"

namespace dockpilot {

/// Anything that turns a camera frame into a relative dock pose estimate.
class DockPoseSource {
 public:
  virtual ~DockPoseSource() = default;
  virtual bool needs_image() const = 0;
  /// `truth` is the ground-truth relative pose; only oracles may look at it.
  virtual RelativePose estimate(const GrayImage* image, const RelativePose& truth) const = 0;
};

class OraclePoseSource final : public DockPoseSource {
 public:
  bool needs_image() const override { return false; }
  RelativePose estimate(const GrayImage*, const RelativePose& truth) const override { return truth; }
};

class NetworkPoseSource final : public DockPoseSource {
 public:
  explicit NetworkPoseSource(DockPoseEstimator estimator) : estimator_(std::move(estimator)) {}
  bool needs_image() const override { return true; }
  RelativePose estimate(const GrayImage* image, const RelativePose& truth) const override;

 private:
  DockPoseEstimator estimator_;
};

struct TrialConfig {
  double start_range_min = 2.0;   // m from the dock centre
  double start_range_max = 8.0;
  double start_bearing_max = 60.0 * std::numbers::pi / 180.0;  // off the dock axis
  double start_heading_jitter = 15.0 * std::numbers::pi / 180.0;
  double sim_dt = 0.01;
  double hull_length = 1.1;
  double hull_width = 0.78;
  double collision_heading = 45.0 * std::numbers::pi / 180.0;
  std::size_t min_block_pixels = 50;
  bool stop_on_success = true;
  bool record_images = false;

  void validate() const;
};

struct TrialStep {
  double t = 0.0;
  Pose2 pose;
  Twist twist;
  RelativePose predicted;
  Pose2 target;
  PwmCommand pwm;
  bool fresh_prediction = false;
};

enum class TrialOutcome { success, timeout, collision, aborted };

struct TrialResult {
  std::uint64_t seed = 0;
  ServoMode mode = ServoMode::continuous;
  TrialOutcome outcome = TrialOutcome::timeout;
  Pose2 start;
  double final_position_error = 0.0;  // m, base to dock centre
  double final_heading_error = 0.0;   // rad, absolute
  double min_position_error = 0.0;
  double sim_time = 0.0;
  std::size_t steps = 0;
  std::size_t predictions = 0;
  std::vector<TrialStep> trajectory;
  std::string message;

  bool success() const { return outcome == TrialOutcome::success; }
};

const char* to_string(TrialOutcome outcome);
const char* to_string(ServoMode mode);

/// Seeded start pose in the dock frame, facing roughly toward the dock and
/// with the dock in view.
Pose2 sample_start_pose(std::uint64_t seed, const TrialConfig& cfg, const DockScene& scene,
                        const FisheyeRenderer& renderer);

/// The eight fixed controller-validation starts, in the dock frame.
std::vector<Pose2> canonical_start_poses();

bool inside_docking_area(const DockScene& scene, const Pose2& pose);
/// Hull rectangle (centred on the base frame) against every block footprint.
bool hull_hits_block(const DockScene& scene, const Pose2& pose, double hull_length, double hull_width);

TrialResult docking_trial(const UsvParams& plant, const DockScene& scene, const DockPoseSource& source,
                          ServoMode mode, const ControllerConfig& ctrl, const TrialConfig& cfg,
                          const DisturbanceConfig& disturbance, const FisheyeRenderer& renderer,
                          std::uint64_t seed, std::optional<Pose2> start = std::nullopt);

/// t,x,y,theta,v,omega,pred_dx,pred_dy,pred_dtheta,target_x,target_y,target_theta,pwm_r,pwm_l
void write_trial_csv(std::ostream& os, const TrialResult& result);
std::string trial_summary_json(const TrialResult& result);

}  // namespace dockpilot
