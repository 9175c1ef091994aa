#include "dockpilot/trial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include "dockpilot/util.hpp"
#include "json.hpp"

namespace dockpilot {

RelativePose NetworkPoseSource::estimate(const GrayImage* image, const RelativePose&) const {
  if (image == nullptr) throw std::invalid_argument("network pose source needs a camera frame");
  return estimator_.predict(*image);
}

void TrialConfig::validate() const {
  if (!(start_range_min > 0.0) || !(start_range_max >= start_range_min))
    throw std::invalid_argument("trial: start ranges must satisfy 0 < min <= max");
  if (!(start_bearing_max >= 0.0) || start_bearing_max > std::numbers::pi)
    throw std::invalid_argument("trial: start_bearing_max must be in [0, pi]");
  if (!(start_heading_jitter >= 0.0)) throw std::invalid_argument("trial: start_heading_jitter must be >= 0");
  if (!(sim_dt > 0.0 && sim_dt <= 0.1)) throw std::invalid_argument("trial: sim_dt must be in (0, 0.1]");
  if (!(hull_length > 0.0) || !(hull_width > 0.0)) throw std::invalid_argument("trial: hull size must be > 0");
}

const char* to_string(TrialOutcome outcome) {
  switch (outcome) {
    case TrialOutcome::success: return "success";
    case TrialOutcome::timeout: return "timeout";
    case TrialOutcome::collision: return "collision";
    case TrialOutcome::aborted: return "aborted";
  }
  return "unknown";
}

const char* to_string(ServoMode mode) { return mode == ServoMode::continuous ? "continuous" : "single_shot"; }

namespace {

// range and bearing are taken from the middle of the dock opening
Pose2 start_from_polar(double range, double bearing, double heading_offset) {
  constexpr double kOpeningX = -1.25;
  const double x = kOpeningX - range * std::cos(bearing);
  const double y = -range * std::sin(bearing);
  const double facing = std::atan2(-y, -x);
  return {x, y, normalize_angle(facing + heading_offset)};
}

using Corners = std::array<std::array<double, 2>, 4>;

bool separated(const Corners& a, const Corners& b, double ax, double ay) {
  double amin = INFINITY, amax = -INFINITY, bmin = INFINITY, bmax = -INFINITY;
  for (const auto& p : a) {
    const double s = p[0] * ax + p[1] * ay;
    amin = std::min(amin, s);
    amax = std::max(amax, s);
  }
  for (const auto& p : b) {
    const double s = p[0] * ax + p[1] * ay;
    bmin = std::min(bmin, s);
    bmax = std::max(bmax, s);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

std::vector<Pose2> canonical_start_poses() {
  std::vector<Pose2> poses;
  constexpr double deg = std::numbers::pi / 180.0;
  for (double range : {2.0, 8.0})
    for (double bearing : {-60.0, -20.0, 20.0, 60.0}) poses.push_back(start_from_polar(range, bearing * deg, 0.0));
  return poses;
}

Pose2 sample_start_pose(std::uint64_t seed, const TrialConfig& cfg, const DockScene& scene,
                        const FisheyeRenderer& renderer) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> range(cfg.start_range_min, cfg.start_range_max);
  std::uniform_real_distribution<double> bearing(-cfg.start_bearing_max, cfg.start_bearing_max);
  std::uniform_real_distribution<double> jitter(-cfg.start_heading_jitter, cfg.start_heading_jitter);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double r = range(rng), b = bearing(rng), j = jitter(rng);
    const Pose2 start = start_from_polar(r, b, j);
    const Pose2 world = compose(scene.dock_pose, start);
    if (renderer.render(scene, world).block_pixels >= cfg.min_block_pixels) return start;
  }
  throw std::runtime_error("could not find a start pose with the dock in view");
}

bool inside_docking_area(const DockScene& scene, const Pose2& pose) {
  const Pose2 d = relative_pose(scene.dock_pose, pose);
  const double half = 0.5 * scene.docking_area_side;
  return std::abs(d.x()) <= half && std::abs(d.y()) <= half;
}

bool hull_hits_block(const DockScene& scene, const Pose2& pose, double hull_length, double hull_width) {
  const Pose2 d = relative_pose(scene.dock_pose, pose);
  const double hl = 0.5 * hull_length, hw = 0.5 * hull_width;
  Corners hull;
  const double sx[4] = {hl, hl, -hl, -hl}, sy[4] = {hw, -hw, -hw, hw};
  for (int i = 0; i < 4; ++i) hull[i] = d.transform_point(sx[i], sy[i]);
  const double c = std::cos(d.theta()), s = std::sin(d.theta());
  for (const Block& b : scene.blocks) {
    const Corners box{{{b.x_min, b.y_min}, {b.x_max, b.y_min}, {b.x_max, b.y_max}, {b.x_min, b.y_max}}};
    if (separated(hull, box, 1.0, 0.0) || separated(hull, box, 0.0, 1.0) || separated(hull, box, c, s) ||
        separated(hull, box, -s, c))
      continue;
    return true;
  }
  return false;
}

TrialResult docking_trial(const UsvParams& plant, const DockScene& scene, const DockPoseSource& source,
                          ServoMode mode, const ControllerConfig& ctrl, const TrialConfig& cfg,
                          const DisturbanceConfig& disturbance, const FisheyeRenderer& renderer,
                          std::uint64_t seed, std::optional<Pose2> start) {
  plant.validate();
  ctrl.validate();
  cfg.validate();
  TrialResult result;
  result.seed = seed;
  result.mode = mode;
  result.start = start ? *start : sample_start_pose(seed, cfg, scene, renderer);

  DisturbanceConfig dist_cfg = disturbance;
  dist_cfg.seed = seed_mix(disturbance.seed, seed);
  Disturbance wind(dist_cfg);
  MotionController controller(ctrl);

  UsvState state;
  state.pose = compose(scene.dock_pose, result.start);
  const double control_dt = 1.0 / ctrl.rate_hz;
  const double prediction_period = 1.0 / ctrl.prediction_rate_hz;
  const int substeps = std::max(1, static_cast<int>(std::lround(control_dt / cfg.sim_dt)));
  const double sim_dt = control_dt / substeps;
  const auto max_steps = static_cast<std::size_t>(std::ceil(ctrl.timeout / control_dt - 1e-9));

  RelativePose predicted;
  Pose2 target = scene.dock_pose;
  bool have_target = false;
  double next_prediction = 0.0;
  double min_error = INFINITY;

  auto errors = [&](const Pose2& pose) {
    const Pose2 d = relative_pose(scene.dock_pose, pose);
    return std::pair{std::hypot(d.x(), d.y()), std::abs(d.theta())};
  };

  result.outcome = TrialOutcome::timeout;
  for (std::size_t k = 0; k < max_steps; ++k) {
    TrialStep rec;
    rec.t = state.time;
    rec.pose = state.pose;
    rec.twist = state.twist;

    const bool due = state.time + 1e-9 >= next_prediction;
    const bool want = mode == ServoMode::continuous ? due : !have_target;
    if (want) {
      const RelativePose truth = relative_pose(state.pose, scene.dock_pose);
      std::optional<GrayImage> frame;
      bool in_view = true;
      if (source.needs_image()) {
        RenderOutput r = renderer.render(scene, state.pose);
        // no dock in the frame: keep the last target rather than trust a blind estimate
        in_view = !have_target || r.block_pixels >= cfg.min_block_pixels;
        frame = std::move(r.image);
      }
      if (in_view) {
        predicted = source.estimate(frame ? &*frame : nullptr, truth);
        target = pbvs_target(state.pose, predicted);
        have_target = true;
        rec.fresh_prediction = true;
        ++result.predictions;
      }
      while (next_prediction <= state.time + 1e-9) next_prediction += prediction_period;
    }
    rec.predicted = predicted;
    rec.target = target;
    rec.pwm = controller.update(state.pose, state.twist, target, control_dt);
    result.trajectory.push_back(rec);

    try {
      for (int s = 0; s < substeps; ++s) state = step(plant, state, rec.pwm, sim_dt, wind.advance(sim_dt));
    } catch (const std::exception& e) {
      result.outcome = TrialOutcome::aborted;
      result.message = e.what();
      break;
    }
    ++result.steps;
    if (!std::isfinite(state.pose.x()) || !std::isfinite(state.pose.y()) || !std::isfinite(rec.pwm.right) ||
        !std::isfinite(rec.pwm.left)) {
      result.outcome = TrialOutcome::aborted;
      result.message = "non-finite state";
      break;
    }

    const auto [pos_err, head_err] = errors(state.pose);
    min_error = std::min(min_error, pos_err);
    if (head_err > cfg.collision_heading && hull_hits_block(scene, state.pose, cfg.hull_length, cfg.hull_width)) {
      result.outcome = TrialOutcome::collision;
      break;
    }
    if (cfg.stop_on_success && inside_docking_area(scene, state.pose) && head_err <= ctrl.heading_tolerance) {
      result.outcome = TrialOutcome::success;
      break;
    }
  }

  // without early stop, success is judged on where the vessel ends up
  if (!cfg.stop_on_success && result.outcome == TrialOutcome::timeout) {
    const auto [pos_err, head_err] = errors(state.pose);
    if (inside_docking_area(scene, state.pose) && head_err <= ctrl.heading_tolerance)
      result.outcome = TrialOutcome::success;
    (void)pos_err;
  }

  TrialStep last;
  last.t = state.time;
  last.pose = state.pose;
  last.twist = state.twist;
  last.predicted = predicted;
  last.target = target;
  result.trajectory.push_back(last);

  const auto [pos_err, head_err] = errors(state.pose);
  result.final_position_error = pos_err;
  result.final_heading_error = head_err;
  result.min_position_error = std::min(min_error, pos_err);
  result.sim_time = state.time;
  return result;
}

void write_trial_csv(std::ostream& os, const TrialResult& result) {
  os << "t,x,y,theta,v,omega,pred_dx,pred_dy,pred_dtheta,target_x,target_y,target_theta,pwm_r,pwm_l\n";
  for (const auto& s : result.trajectory) {
    os << fmt_num(s.t) << ',' << fmt_num(s.pose.x()) << ',' << fmt_num(s.pose.y()) << ',' << fmt_num(s.pose.theta())
       << ',' << fmt_num(s.twist.v) << ',' << fmt_num(s.twist.omega) << ',' << fmt_num(s.predicted.x()) << ','
       << fmt_num(s.predicted.y()) << ',' << fmt_num(s.predicted.theta()) << ',' << fmt_num(s.target.x()) << ','
       << fmt_num(s.target.y()) << ',' << fmt_num(s.target.theta()) << ',' << fmt_num(s.pwm.right) << ','
       << fmt_num(s.pwm.left) << '\n';
  }
}

std::string trial_summary_json(const TrialResult& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["mode"] = to_string(r.mode);
  j["outcome"] = to_string(r.outcome);
  j["success"] = r.success();
  j["start"] = {r.start.x(), r.start.y(), r.start.theta()};
  j["final_position_error_m"] = r.final_position_error;
  j["final_heading_error_rad"] = r.final_heading_error;
  j["min_position_error_m"] = r.min_position_error;
  j["sim_time_s"] = r.sim_time;
  j["steps"] = r.steps;
  j["predictions"] = r.predictions;
  if (!r.message.empty()) j["message"] = r.message;
  return j.dump(2) + "\n";
}

}  // namespace dockpilot
