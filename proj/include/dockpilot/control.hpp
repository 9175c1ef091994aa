#pragma once

#include <limits>

#include "dockpilot/geometry.hpp"
#include "dockpilot/plant.hpp"

namespace dockpilot {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double integral_limit = std::numeric_limits<double>::infinity();
  double output_limit = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
};

/// e = reference - measurement; kp e + ki I + kd de/dt, integral and output
/// both saturated.
double pid_step(const PidGains& gains, PidState& state, double reference, double measurement, double dt);

enum class ServoMode { single_shot, continuous };

struct ControllerConfig {
  PidGains distance{0.6, 0.02, 0.1, 2.0, 0.5};
  PidGains bearing{1.5, 0.0, 0.2, 1.0, 0.8};
  PidGains heading{1.2, 0.0, 0.2, 1.0, 0.8};
  PidGains surge{1.5, 0.3, 0.0, 1.0, 1.5};
  PidGains yaw{1.0, 0.2, 0.0, 1.0, 2.0};
  double alpha = 0.8;
  double beta = 1.2;
  double pwm_min = -1.0;
  double pwm_max = 1.0;
  double rate_hz = 10.0;
  double prediction_rate_hz = 6.0;
  double position_tolerance = 0.75;          // m, half the docking-area side
  double heading_tolerance = 20.0 * std::numbers::pi / 180.0;
  double switch_radius = 1.0;                // m, approach -> align
  double lookahead = 1.5;                    // m along the target axis
  double entry_standoff = 3.0;               // m behind the target, aim limit while outside the cone
  double align_cross_track_gain = 1.0;       // rad per m of lateral offset, through atan
  double entry_cone_slope = 0.4;             // |lateral| / distance-behind that counts as lined up
  double timeout = 120.0;                    // simulated s

  void validate() const;
};

/// T_r = (beta v + alpha w) / (2 alpha beta), T_l = (beta v - alpha w) / (2 alpha beta).
Thrusts inverse_kinematics(double v, double omega, double alpha, double beta);

/// Mixer from effort (u_v, u_w) to unlimited PWM set-points.
PwmCommand allocate_pwm(const ControllerConfig& cfg, double u_v, double u_omega);

double clip_pwm(double pwm, double pwm_min, double pwm_max);

/// World-frame dock pose from the current odometry pose and a relative estimate.
Pose2 pbvs_target(const Pose2& current_odometry, const RelativePose& predicted);

struct Effort {
  double u_v = 0.0;
  double u_omega = 0.0;
};

enum class ControlPhase { approach, align };

/// Cascaded PID: pose error -> desired twist -> effort -> PWM.
class MotionController {
 public:
  explicit MotionController(ControllerConfig cfg);

  const ControllerConfig& config() const { return cfg_; }
  ControlPhase phase() const { return phase_; }

  /// Approach steers toward a point on the target's x axis, `lookahead`
  /// metres ahead of the vessel's projection onto that axis. Outside the
  /// entry cone that point is held `entry_standoff` behind the target so
  /// the vessel lines up before it gets close. Inside the switch radius
  /// the law regulates the body-x offset and final heading.
  Twist outer_loop(const Pose2& current, const Pose2& target, double dt);
  Effort inner_loop(const Twist& desired, const Twist& measured, double dt);
  PwmCommand update(const Pose2& current, const Twist& measured, const Pose2& target, double dt);

  void reset();

 private:
  ControllerConfig cfg_;
  ControlPhase phase_ = ControlPhase::approach;
  PidState approach_distance_, approach_bearing_, align_offset_, align_heading_;
  PidState surge_, yaw_;
};

}  // namespace dockpilot
