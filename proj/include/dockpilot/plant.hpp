#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "dockpilot/geometry.hpp"

namespace dockpilot {

struct UsvParams {
  double alpha = 0.8;                    // (m/s) per unit total thrust
  double beta = 1.2;                     // (rad/s) per unit differential thrust
  double actuator_time_constant = 0.3;   // s
  double hull_drag_time_constant = 1.0;  // s
  double pwm_to_thrust_gain = 1.0;       // thrust per PWM unit
  double max_thrust = 1.0;

  void validate() const;
};

struct Twist {
  double v = 0.0;      // surge, m/s
  double omega = 0.0;  // yaw rate, rad/s, positive counterclockwise
  friend bool operator==(const Twist&, const Twist&) = default;
};

struct Thrusts {
  double right = 0.0;
  double left = 0.0;
  friend bool operator==(const Thrusts&, const Thrusts&) = default;
};

struct PwmCommand {
  double right = 0.0;
  double left = 0.0;
};

struct UsvState {
  Pose2 pose;
  Twist twist;
  Thrusts thrust;
  double time = 0.0;
};

struct DisturbanceConfig {
  double wind_force_std = 0.055;   // m/s^2 equivalent, stationary std
  double wind_torque_std = 0.03;   // rad/s^2 equivalent
  double correlation_time = 5.0;   // s
  std::uint64_t seed = 7;

  void validate() const;
  static DisturbanceConfig none() { return {0.0, 0.0, 5.0, 0}; }
};

/// Acceleration increments applied to the body twist during one step.
struct DisturbanceSample {
  double surge_accel = 0.0;
  double yaw_accel = 0.0;
};

/// Ornstein-Uhlenbeck wind/wave process on surge force and yaw torque.
class Disturbance {
 public:
  explicit Disturbance(const DisturbanceConfig& cfg);
  DisturbanceSample advance(double dt);
  DisturbanceSample current() const { return state_; }

 private:
  DisturbanceConfig cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  DisturbanceSample state_;
};

/// Static thrust map: v = alpha (Tr + Tl), omega = beta (Tr - Tl).
Twist forward_model(const UsvParams& params, double thrust_right, double thrust_left);

double pwm_to_thrust(const UsvParams& params, double pwm);

/// Advances the plant by dt with first-order actuator and hull lag and an
/// exact-arc unicycle pose update.
UsvState step(const UsvParams& params, const UsvState& state, const PwmCommand& commanded, double dt,
              const DisturbanceSample& disturbance = {});

/// Exact unicycle displacement for constant (v, omega) over dt.
Pose2 unicycle_arc(const Pose2& start, double v, double omega, double dt);

/// CSV rows t,x,y,theta,v,omega,T_r,T_l.
void write_trajectory_csv(std::ostream& os, const std::vector<UsvState>& states);

}  // namespace dockpilot
