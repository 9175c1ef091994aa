#include "dockpilot/plant.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "dockpilot/util.hpp"

namespace dockpilot {

void UsvParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("plant: alpha and beta must be > 0");
  if (!(actuator_time_constant > 0.0) || !(hull_drag_time_constant > 0.0))
    throw std::invalid_argument("plant: time constants must be > 0");
  if (!(max_thrust > 0.0)) throw std::invalid_argument("plant: max_thrust must be > 0");
  if (!(pwm_to_thrust_gain > 0.0)) throw std::invalid_argument("plant: pwm_to_thrust_gain must be > 0");
}

void DisturbanceConfig::validate() const {
  if (!(wind_force_std >= 0.0) || !(wind_torque_std >= 0.0))
    throw std::invalid_argument("disturbance: standard deviations must be >= 0");
  if (!(correlation_time > 0.0)) throw std::invalid_argument("disturbance: correlation_time must be > 0");
}

Disturbance::Disturbance(const DisturbanceConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
  // start from the stationary distribution
  state_.surge_accel = cfg_.wind_force_std * normal_(rng_);
  state_.yaw_accel = cfg_.wind_torque_std * normal_(rng_);
}

DisturbanceSample Disturbance::advance(double dt) {
  const double decay = std::exp(-dt / cfg_.correlation_time);
  const double diffusion = std::sqrt(std::max(0.0, 1.0 - decay * decay));
  state_.surge_accel = decay * state_.surge_accel + cfg_.wind_force_std * diffusion * normal_(rng_);
  state_.yaw_accel = decay * state_.yaw_accel + cfg_.wind_torque_std * diffusion * normal_(rng_);
  return state_;
}

Twist forward_model(const UsvParams& params, double thrust_right, double thrust_left) {
  return {params.alpha * (thrust_right + thrust_left), params.beta * (thrust_right - thrust_left)};
}

double pwm_to_thrust(const UsvParams& params, double pwm) {
  return std::clamp(params.pwm_to_thrust_gain * pwm, -params.max_thrust, params.max_thrust);
}

Pose2 unicycle_arc(const Pose2& start, double v, double omega, double dt) {
  const double dtheta = omega * dt;
  double dx = 0.0, dy = 0.0;
  if (std::abs(omega) < 1e-6) {
    dx = v * dt * (1.0 - dtheta * dtheta / 6.0);
    dy = v * dt * (dtheta / 2.0);
  } else {
    dx = v / omega * std::sin(dtheta);
    const double s = std::sin(0.5 * dtheta);
    dy = v / omega * 2.0 * s * s;
  }
  const auto p = start.transform_point(dx, dy);
  return {p[0], p[1], start.theta() + dtheta};
}

UsvState step(const UsvParams& params, const UsvState& state, const PwmCommand& commanded, double dt,
              const DisturbanceSample& disturbance) {
  if (!(dt > 0.0) || dt > 0.1) throw std::invalid_argument("plant step: dt must be in (0, 0.1]");
  const bool finite = std::isfinite(state.pose.x()) && std::isfinite(state.pose.y()) &&
                      std::isfinite(state.twist.v) && std::isfinite(state.twist.omega) &&
                      std::isfinite(state.thrust.right) && std::isfinite(state.thrust.left) &&
                      std::isfinite(commanded.right) && std::isfinite(commanded.left);
  if (!finite) throw std::invalid_argument("plant step: non-finite state or command");

  const double act_decay = std::exp(-dt / params.actuator_time_constant);
  const double hull_decay = std::exp(-dt / params.hull_drag_time_constant);
  const double tau_h = params.hull_drag_time_constant;

  UsvState next;
  next.time = state.time + dt;
  const double cmd_r = pwm_to_thrust(params, commanded.right);
  const double cmd_l = pwm_to_thrust(params, commanded.left);
  next.thrust.right = cmd_r + (state.thrust.right - cmd_r) * act_decay;
  next.thrust.left = cmd_l + (state.thrust.left - cmd_l) * act_decay;

  const Twist target = forward_model(params, next.thrust.right, next.thrust.left);
  const double v_ss = target.v + disturbance.surge_accel * tau_h;
  const double w_ss = target.omega + disturbance.yaw_accel * tau_h;
  next.twist.v = v_ss + (state.twist.v - v_ss) * hull_decay;
  next.twist.omega = w_ss + (state.twist.omega - w_ss) * hull_decay;

  const double v_mid = 0.5 * (state.twist.v + next.twist.v);
  const double w_mid = 0.5 * (state.twist.omega + next.twist.omega);
  next.pose = unicycle_arc(state.pose, v_mid, w_mid, dt);
  return next;
}

void write_trajectory_csv(std::ostream& os, const std::vector<UsvState>& states) {
  os << "t,x,y,theta,v,omega,T_r,T_l\n";
  for (const auto& s : states) {
    os << fmt_num(s.time) << ',' << fmt_num(s.pose.x()) << ',' << fmt_num(s.pose.y()) << ','
       << fmt_num(s.pose.theta()) << ',' << fmt_num(s.twist.v) << ',' << fmt_num(s.twist.omega) << ','
       << fmt_num(s.thrust.right) << ',' << fmt_num(s.thrust.left) << '\n';
  }
}

}  // namespace dockpilot
