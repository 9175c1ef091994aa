#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "dockpilot/config.hpp"
#include "dockpilot/trial.hpp"

using namespace dockpilot;

namespace {

struct World {
  RunConfig cfg = default_config();
  DockScene scene = cfg.scene_template();
  FisheyeRenderer renderer{cfg.camera_model()};
};

}  // namespace

TEST_CASE("docking area and hull checks") {
  World w;
  CHECK(inside_docking_area(w.scene, Pose2(0, 0, 0)));
  CHECK(inside_docking_area(w.scene, Pose2(0.7, -0.7, 0.3)));
  CHECK(!inside_docking_area(w.scene, Pose2(0.8, 0, 0)));
  CHECK(!inside_docking_area(w.scene, Pose2(-3, 0, 0)));
  CHECK(!hull_hits_block(w.scene, Pose2(0, 0, 0), 1.1, 0.78));
  CHECK(hull_hits_block(w.scene, Pose2(0, 0, std::numbers::pi / 2), 1.1, 0.78) == false);
  CHECK(hull_hits_block(w.scene, Pose2(0, 0.8, 0), 1.1, 0.78));
  CHECK(hull_hits_block(w.scene, Pose2(0.9, 0, 0), 1.1, 0.78));
  CHECK(!hull_hits_block(w.scene, Pose2(-5, 0, 0), 1.1, 0.78));
}

TEST_CASE("seeded start poses") {
  World w;
  const TrialConfig tc;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const Pose2 p = sample_start_pose(s, tc, w.scene, w.renderer);
    const Pose2 q = sample_start_pose(s, tc, w.scene, w.renderer);
    CHECK(p == q);
    CHECK(p.x() < w.scene.opening_x());
    const double range = std::hypot(p.x() - w.scene.opening_x(), p.y());
    CHECK(range >= tc.start_range_min - 1e-9);
    CHECK(range <= tc.start_range_max + 1e-9);
    const auto r = w.renderer.render(w.scene, p);
    CHECK(r.block_pixels >= tc.min_block_pixels);
  }
}

TEST_CASE("oracle docks from every canonical start and converges") {
  World w;
  const OraclePoseSource oracle;
  TrialConfig tc = w.cfg.trial;
  tc.stop_on_success = false;
  const DisturbanceConfig calm = DisturbanceConfig::none();
  const auto starts = canonical_start_poses();
  REQUIRE(starts.size() == 8);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const TrialResult r = docking_trial(w.cfg.plant, w.scene, oracle, ServoMode::continuous, w.cfg.controller, tc,
                                        calm, w.renderer, i, starts[i]);
    CAPTURE(i);
    CHECK(r.success());
    CHECK(r.sim_time <= w.cfg.controller.timeout + 1e-9);
    CHECK(r.min_position_error < 0.1);
  }
}

TEST_CASE("trial outputs are deterministic and well formed") {
  World w;
  const OraclePoseSource oracle;
  const auto a = docking_trial(w.cfg.plant, w.scene, oracle, ServoMode::single_shot, w.cfg.controller, w.cfg.trial,
                               w.cfg.disturbance, w.renderer, 77);
  const auto b = docking_trial(w.cfg.plant, w.scene, oracle, ServoMode::single_shot, w.cfg.controller, w.cfg.trial,
                               w.cfg.disturbance, w.renderer, 77);
  std::ostringstream ca, cb;
  write_trial_csv(ca, a);
  write_trial_csv(cb, b);
  CHECK(ca.str() == cb.str());
  CHECK(trial_summary_json(a) == trial_summary_json(b));
  CHECK(ca.str().rfind("t,x,y,theta,v,omega,pred_dx,pred_dy,pred_dtheta,target_x,target_y,target_theta,pwm_r,pwm_l\n", 0) == 0);
  CHECK(a.predictions == 1);
  CHECK(std::string(to_string(a.outcome)).size() > 0);
  CHECK(std::string(to_string(ServoMode::continuous)) == "continuous");
}

TEST_CASE("a start inside a block is a collision") {
  World w;
  const OraclePoseSource oracle;
  const DisturbanceConfig calm = DisturbanceConfig::none();
  const auto r = docking_trial(w.cfg.plant, w.scene, oracle, ServoMode::continuous, w.cfg.controller, w.cfg.trial,
                               calm, w.renderer, 1, Pose2(0, 1.0, std::numbers::pi / 2));
  CHECK(r.outcome == TrialOutcome::collision);
}

namespace {

// needs frames like the network does, answers with the truth
class PerfectCamera final : public DockPoseSource {
 public:
  bool needs_image() const override { return true; }
  RelativePose estimate(const GrayImage* image, const RelativePose& truth) const override {
    REQUIRE(image != nullptr);
    return truth;
  }
};

}  // namespace

TEST_CASE("image-driven source docks like the oracle") {
  World w;
  const PerfectCamera cam;
  const OraclePoseSource oracle;
  const DisturbanceConfig calm = DisturbanceConfig::none();
  const Pose2 start = canonical_start_poses()[0];
  const auto a = docking_trial(w.cfg.plant, w.scene, cam, ServoMode::continuous, w.cfg.controller, w.cfg.trial, calm,
                               w.renderer, 3, start);
  const auto b = docking_trial(w.cfg.plant, w.scene, oracle, ServoMode::continuous, w.cfg.controller, w.cfg.trial,
                               calm, w.renderer, 3, start);
  CHECK(a.success());
  CHECK(a.steps == b.steps);
  CHECK(a.predictions <= b.predictions);
  CHECK(a.predictions > 0);
}
