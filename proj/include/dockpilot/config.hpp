#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dockpilot/camera.hpp"
#include "dockpilot/control.hpp"
#include "dockpilot/data.hpp"
#include "dockpilot/net.hpp"
#include "dockpilot/plant.hpp"
#include "dockpilot/trial.hpp"

namespace dockpilot {

struct CameraSettings {
  int width = 848;
  int height = 800;
  double diagonal_fov_deg = 173.0;
  double mount_x = 0.45;
  double mount_y = 0.0;
  double mount_yaw_rad = 0.0;
  double height_above_water = 0.25;
};

struct SceneSettings {
  double block_height = 0.3;
  int water_brightness = 60;
  int sky_brightness = 180;
  int block_brightness = 230;
  double x_face_shade = 1.0;
  double y_face_shade = 1.0;
};

struct EvaluationConfig {
  std::vector<int> data_eff_sizes{400, 800, 1200, 1600, 2000};
  int data_eff_epochs = 30;
  std::uint64_t data_eff_seed = 21;
  int trials = 20;
  std::uint64_t trial_seed = 500;
  int paired_trials = 10;
  bool oracle = false;             // dock with ground-truth poses instead of the network
  bool trial_disturbance = true;

  void validate() const;
};

/// Everything one pipeline run needs. Angles are radians unless the key
/// says otherwise.
struct RunConfig {
  UsvParams plant;
  DisturbanceConfig disturbance;
  CameraSettings camera;
  SceneSettings scene;
  CollectionConfig collection;
  AugmentationConfig augmentation;
  NetworkConfig network;
  TrainConfig training;
  ControllerConfig controller;
  TrialConfig trial;
  EvaluationConfig evaluation;

  CameraModel camera_model() const;
  DockScene scene_template() const;
  /// Pushes shared values (scene appearance, plant alpha/beta) into the
  /// module configs and validates every section.
  void finalize();
};

RunConfig default_config();
/// `[section]` headers and `key = value` lines; values are numbers,
/// true/false, "strings" or [lists]. Unknown sections or keys throw.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);
/// Effective configuration, every key, in a form parse_config reads back.
std::string dump_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace dockpilot
