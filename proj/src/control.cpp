#include "dockpilot/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dockpilot {

void PidGains::validate() const {
  if (!(integral_limit >= 0.0) || !(output_limit >= 0.0)) throw std::invalid_argument("pid: limits must be >= 0");
}

double pid_step(const PidGains& gains, PidState& state, double reference, double measurement, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("pid_step: dt must be > 0");
  const double error = reference - measurement;
  state.integral = std::clamp(state.integral + error * dt, -gains.integral_limit, gains.integral_limit);
  const double derivative = (error - state.prev_error) / dt;
  state.prev_error = error;
  const double out = gains.kp * error + gains.ki * state.integral + gains.kd * derivative;
  return std::clamp(out, -gains.output_limit, gains.output_limit);
}

void ControllerConfig::validate() const {
  for (const PidGains* g : {&distance, &bearing, &heading, &surge, &yaw}) g->validate();
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("controller: alpha and beta must be > 0");
  if (!(pwm_min < pwm_max)) throw std::invalid_argument("controller: pwm_min must be < pwm_max");
  if (!(rate_hz > 0.0) || !(prediction_rate_hz > 0.0)) throw std::invalid_argument("controller: rates must be > 0");
  if (!(timeout > 0.0)) throw std::invalid_argument("controller: timeout must be > 0");
  if (!(switch_radius >= 0.0) || !(lookahead > 0.0) || !(entry_standoff >= 0.0) || !(entry_cone_slope > 0.0))
    throw std::invalid_argument("controller: bad approach geometry");
}

Thrusts inverse_kinematics(double v, double omega, double alpha, double beta) {
  const double denom = 2.0 * alpha * beta;
  return {(beta * v + alpha * omega) / denom, (beta * v - alpha * omega) / denom};
}

PwmCommand allocate_pwm(const ControllerConfig& cfg, double u_v, double u_omega) {
  const Thrusts t = inverse_kinematics(u_v, u_omega, cfg.alpha, cfg.beta);
  return {t.right, t.left};
}

double clip_pwm(double pwm, double pwm_min, double pwm_max) { return std::min(std::max(pwm, pwm_min), pwm_max); }

Pose2 pbvs_target(const Pose2& current_odometry, const RelativePose& predicted) {
  return apply_relative(current_odometry, predicted);
}

MotionController::MotionController(ControllerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void MotionController::reset() {
  phase_ = ControlPhase::approach;
  approach_distance_ = approach_bearing_ = align_offset_ = align_heading_ = surge_ = yaw_ = PidState{};
}

Twist MotionController::outer_loop(const Pose2& current, const Pose2& target, double dt) {
  const Pose2 in_target = relative_pose(target, current);  // vessel in target frame
  const double distance = std::hypot(in_target.x(), in_target.y());
  if (distance == 0.0 && normalize_angle(target.theta() - current.theta()) == 0.0) return {};

  // hysteresis keeps noisy targets from flipping the phase every step
  if (phase_ == ControlPhase::approach && distance <= cfg_.switch_radius) {
    phase_ = ControlPhase::align;
    align_offset_ = align_heading_ = PidState{};
  } else if (phase_ == ControlPhase::align && distance > cfg_.switch_radius + 0.5) {
    phase_ = ControlPhase::approach;
    approach_distance_ = approach_bearing_ = PidState{};
  }

  Twist desired;
  if (phase_ == ControlPhase::approach) {
    const bool lined_up = std::abs(in_target.y()) <= cfg_.entry_cone_slope * std::max(-in_target.x(), 0.0);
    const double aim_x = std::min(in_target.x() + cfg_.lookahead, lined_up ? 0.0 : -cfg_.entry_standoff);
    const auto aim = target.transform_point(aim_x, 0.0);
    const double bearing_world = std::atan2(aim[1] - current.y(), aim[0] - current.x());
    const double bearing_error = normalize_angle(bearing_world - current.theta());
    const double along = std::max(distance * std::cos(bearing_error), 0.0);
    desired.v = pid_step(cfg_.distance, approach_distance_, along, 0.0, dt);
    desired.omega = pid_step(cfg_.bearing, approach_bearing_, bearing_error, 0.0, dt);
  } else {
    const Pose2 target_in_body = relative_pose(current, target);
    desired.v = pid_step(cfg_.distance, align_offset_, target_in_body.x(), 0.0, dt);
    const double cross = std::atan(cfg_.align_cross_track_gain * in_target.y());
    desired.omega = pid_step(cfg_.heading, align_heading_, target_in_body.theta() - cross, 0.0, dt);
  }
  return desired;
}

Effort MotionController::inner_loop(const Twist& desired, const Twist& measured, double dt) {
  return {pid_step(cfg_.surge, surge_, desired.v, measured.v, dt),
          pid_step(cfg_.yaw, yaw_, desired.omega, measured.omega, dt)};
}

PwmCommand MotionController::update(const Pose2& current, const Twist& measured, const Pose2& target, double dt) {
  const Twist desired = outer_loop(current, target, dt);
  const Effort effort = inner_loop(desired, measured, dt);
  const PwmCommand raw = allocate_pwm(cfg_, effort.u_v, effort.u_omega);
  return {clip_pwm(raw.right, cfg_.pwm_min, cfg_.pwm_max), clip_pwm(raw.left, cfg_.pwm_min, cfg_.pwm_max)};
}

}  // namespace dockpilot
