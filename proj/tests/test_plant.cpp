#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dockpilot/plant.hpp"

using namespace dockpilot;

namespace {

std::vector<UsvState> run(const UsvParams& p, UsvState s, const std::vector<PwmCommand>& cmds, double dt,
                          const DisturbanceConfig& dcfg) {
  Disturbance d(dcfg);
  std::vector<UsvState> out{s};
  for (const auto& c : cmds) {
    s = step(p, s, c, dt, d.advance(dt));
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("forward_model examples") {
  UsvParams p;
  p.alpha = 1, p.beta = 1;
  Twist t = forward_model(p, 0.5, 0.5);
  CHECK(t.v == doctest::Approx(1.0));
  CHECK(t.omega == 0.0);
  t = forward_model(p, 0, 0);
  CHECK(t.v == 0.0);
  CHECK(t.omega == 0.0);
  p.alpha = 0.8, p.beta = 0.5;
  t = forward_model(p, 0.6, 0.2);
  CHECK(std::abs(t.v - 0.64) < 1e-12);
  CHECK(std::abs(t.omega - 0.20) < 1e-12);
}

TEST_CASE("pwm_to_thrust is linear then clamped") {
  UsvParams p;
  CHECK(pwm_to_thrust(p, 0.0) == 0.0);
  p.pwm_to_thrust_gain = 0.001;
  CHECK(pwm_to_thrust(p, 500) == doctest::Approx(0.5));
  CHECK(pwm_to_thrust(p, 2000) == 1.0);
  CHECK(pwm_to_thrust(p, -2000) == -1.0);
}

TEST_CASE("parameter validation") {
  UsvParams p;
  CHECK_NOTHROW(p.validate());
  p.alpha = 0;
  CHECK_THROWS(p.validate());
  p = {};
  p.actuator_time_constant = -1;
  CHECK_THROWS(p.validate());
  DisturbanceConfig d;
  d.wind_force_std = -0.1;
  CHECK_THROWS(d.validate());
}

TEST_CASE("equilibrium: zero thrust and twist stays put") {
  UsvState s;
  s.pose = Pose2(1, 2, 0.3);
  const UsvState n = step(UsvParams{}, s, {0, 0}, 0.05);
  CHECK(n.pose == s.pose);
  CHECK(n.twist == s.twist);
  CHECK(n.time == doctest::Approx(0.05));
}

TEST_CASE("step response approaches forward_model") {
  UsvParams p;
  p.alpha = 1;
  UsvState s;
  const double dt = 0.01;
  const double tmax = 10 * std::max(p.actuator_time_constant, p.hull_drag_time_constant);
  for (double t = 0; t < tmax; t += dt) s = step(p, s, {0.5, 0.5}, dt);
  CHECK(std::abs(s.twist.v - 1.0) < 0.01);
  CHECK(s.twist.omega == 0.0);
  CHECK(s.pose.theta() == 0.0);
  CHECK(std::abs(s.pose.y()) == 0.0);

  // closed-form first-order cascade oracle for the realized thrust
  UsvState q;
  for (int i = 0; i < 50; ++i) q = step(p, q, {0.5, 0.5}, dt);
  const double expected = 0.5 * (1 - std::exp(-0.5 / p.actuator_time_constant));
  CHECK(std::abs(q.thrust.right - expected) < 1e-12);
}

TEST_CASE("equal thrusts never turn") {
  UsvParams p;
  UsvState s;
  s.pose = Pose2(0, 0, 1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 2000; ++i) {
    const double c = u(rng);
    s = step(p, s, {c, c}, 0.02);
    REQUIRE(s.twist.omega == 0.0);
    REQUIRE(s.pose.theta() == 1.0);
  }
}

TEST_CASE("step rejects bad input") {
  UsvState s;
  CHECK_THROWS(step(UsvParams{}, s, {0, 0}, 0.0));
  CHECK_THROWS(step(UsvParams{}, s, {0, 0}, 0.2));
  CHECK_THROWS(step(UsvParams{}, s, {std::nan(""), 0}, 0.01));
  s.twist.v = INFINITY;
  CHECK_THROWS(step(UsvParams{}, s, {0, 0}, 0.01));
}

TEST_CASE("unicycle arc is exact and continuous at omega = 0") {
  const Pose2 start(1, -1, 0.4);
  // full circle returns to start
  const double w = 0.5, v = 1.0;
  const Pose2 end = unicycle_arc(start, v, w, 2 * std::numbers::pi / w);
  CHECK(pose_distance_inf(end, start) < 1e-9);
  // quarter turn of radius 2
  const Pose2 q = unicycle_arc(Pose2{}, 1.0, 0.5, std::numbers::pi);
  CHECK(std::abs(q.x() - 2.0) < 1e-12);
  CHECK(std::abs(q.y() - 2.0) < 1e-12);
  // both branches agree with an extended-precision closed form near the threshold
  for (double om : {0.0, 0.5e-6, 0.9e-6, 1.1e-6, 3e-6, -0.9e-6, -1.1e-6}) {
    const long double th = (long double)om * 0.1L, half = th / 2;
    const long double ex = om == 0.0 ? 0.07L : 0.7L * std::sin(th) / om;
    const long double ey = om == 0.0 ? 0.0L : 0.7L * 2 * std::sin(half) * std::sin(half) / om;
    const Pose2 a = unicycle_arc(Pose2{}, 0.7, om, 0.1);
    CAPTURE(om);
    CHECK(std::abs(a.x() - double(ex)) < 1e-12);
    CHECK(std::abs(a.y() - double(ey)) < 1e-12);
  }
  // splitting dt does not change the result
  const Pose2 one = unicycle_arc(start, 0.3, 0.8, 0.1);
  const Pose2 two = unicycle_arc(unicycle_arc(start, 0.3, 0.8, 0.05), 0.3, 0.8, 0.05);
  CHECK(pose_distance_inf(one, two) < 1e-14);
}

TEST_CASE("trajectories are equivariant under world transforms") {
  UsvParams p;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<PwmCommand> cmds;
  for (int i = 0; i < 500; ++i) cmds.push_back({u(rng), u(rng)});
  DisturbanceConfig dcfg;
  UsvState s0;
  s0.pose = Pose2(0.5, 0.2, 0.1);
  const auto a = run(p, s0, cmds, 0.02, dcfg);
  const Pose2 g(7.0, -3.0, 2.2);
  UsvState s1 = s0;
  s1.pose = compose(g, s0.pose);
  const auto b = run(p, s1, cmds, 0.02, dcfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(pose_distance_inf(compose(g, a[i].pose), b[i].pose) < 1e-9);
    CHECK(a[i].twist.v == doctest::Approx(b[i].twist.v));
  }
}

TEST_CASE("seeded runs serialize byte-identically") {
  UsvParams p;
  std::vector<PwmCommand> cmds(300, PwmCommand{0.4, 0.1});
  DisturbanceConfig d;
  d.seed = 99;
  std::ostringstream a, b;
  write_trajectory_csv(a, run(p, {}, cmds, 0.01, d));
  write_trajectory_csv(b, run(p, {}, cmds, 0.01, d));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("t,x,y,theta,v,omega,T_r,T_l\n", 0) == 0);
  d.seed = 100;
  std::ostringstream c;
  write_trajectory_csv(c, run(p, {}, cmds, 0.01, d));
  CHECK(c.str() != a.str());
}

TEST_CASE("disturbance is stationary with the configured spread") {
  DisturbanceConfig cfg;
  cfg.seed = 5;
  Disturbance d(cfg);
  double s2 = 0, w2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto x = d.advance(0.1);
    s2 += x.surge_accel * x.surge_accel;
    w2 += x.yaw_accel * x.yaw_accel;
  }
  CHECK(std::sqrt(s2 / n) == doctest::Approx(cfg.wind_force_std).epsilon(0.1));
  CHECK(std::sqrt(w2 / n) == doctest::Approx(cfg.wind_torque_std).epsilon(0.1));
  const Disturbance none(DisturbanceConfig::none());
  CHECK(none.current().surge_accel == 0.0);
}

TEST_CASE("default disturbance drifts an unforced hull at a few cm/s") {
  UsvParams p;
  DisturbanceConfig cfg;
  double sum = 0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    Disturbance d(cfg);
    UsvState s;
    for (int i = 0; i < 3000; ++i) {
      s = step(p, s, {0, 0}, 0.02, d.advance(0.02));
      sum += std::abs(s.twist.v);
      ++n;
    }
  }
  const double mean = sum / n;
  CHECK(mean > 0.02);
  CHECK(mean < 0.1);
}
