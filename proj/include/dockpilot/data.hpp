#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dockpilot/camera.hpp"
#include "dockpilot/geometry.hpp"
#include "dockpilot/plant.hpp"

namespace dockpilot {

struct SampleMeta {
  Pose2 world_pose;  // ground truth at image time
  double speed = 0.0;
  double distance_to_dock = 0.0;
  double timestamp = 0.0;
  std::string scene_id;
  bool augmented = false;
};

struct Sample {
  std::string id;
  std::string image_ref;  // relative to the manifest directory
  RelativePose label;
  SampleMeta meta;
};

struct DatasetStats {
  struct Column {
    double mean = 0.0, std = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0;
  };
  Column distance;
  Column speed;
  std::size_t count = 0;
};

struct DatasetManifest {
  std::vector<Sample> samples;
  std::string config_hash;
  std::filesystem::path root;  // directory that image_ref is relative to

  std::filesystem::path image_path(const Sample& s) const { return root / s.image_ref; }
};

// -- synchronisation ---------------------------------------------------------

struct PoseStamp {
  double t = 0.0;
  Pose2 pose;
  double speed = 0.0;
};

struct ImageStamp {
  double t = 0.0;
  std::size_t frame = 0;
};

struct SyncedPair {
  std::size_t image_index = 0;
  std::size_t pose_index = 0;
  double offset = 0.0;  // image t - pose t
};

/// Approximate-time pairing: each image takes the unused pose nearest in
/// time, if within threshold. Both streams must be sorted by time.
std::vector<SyncedPair> approximate_time_pair(const std::vector<PoseStamp>& poses,
                                              const std::vector<ImageStamp>& images, double threshold);

/// Streaming form of the same matcher, fed message by message.
class SyncBuffer {
 public:
  explicit SyncBuffer(double threshold);
  void push_pose(const PoseStamp& p);
  void push_image(const ImageStamp& img);
  /// Emits pairs whose match can no longer improve; call flush() at end.
  std::vector<std::pair<ImageStamp, PoseStamp>> drain();
  std::vector<std::pair<ImageStamp, PoseStamp>> flush();

 private:
  std::vector<std::pair<ImageStamp, PoseStamp>> match(bool final);
  double threshold_;
  std::vector<PoseStamp> poses_;
  std::vector<ImageStamp> images_;
};

// -- collection --------------------------------------------------------------

struct OdometryDrift {
  bool enabled = false;
  double position_std = 0.01;  // m / sqrt(s)
  double heading_std = 0.002;  // rad / sqrt(s)
};

struct CollectionConfig {
  int scenes = 10;
  int samples_per_scene = 200;
  std::uint64_t seed = 1;
  double sim_rate_hz = 200.0;   // odometry stream
  double camera_rate_hz = 30.0;
  double log_interval = 1.0;    // s between logged pairs
  double sync_threshold = 0.01; // s
  double dock_placement_range = 20.0;  // m, |x|,|y| of the random dock position
  double area_min_radius = 1.0;
  double area_max_radius = 10.0;
  double area_half_angle_deg = 80.0;
  double waypoint_radius_mean = 2.4;   // m beyond the minimum exploration radius
  double waypoint_min_radius = 1.6;
  double speed_min = 0.06;
  double speed_max = 0.45;
  double max_view_offset_deg = 40.0;   // heading offset from the dock bearing
  double waypoint_timeout = 25.0;      // s
  std::size_t min_block_pixels = 50;
  int image_side = 224;                // stored resolution
  int max_retries = 8;
  OdometryDrift drift;
  DockScene scene = DockScene::standard(Pose2{});  // layout and appearance; the pose is drawn per scene

  void validate() const;
};

struct SceneRecording {
  std::string scene_id;
  DockScene scene;
  std::vector<Sample> samples;
  std::vector<GrayImage> images;  // parallel to samples, stored resolution
  std::vector<UsvState> trajectory;  // ground truth at every odometry tick
  int attempts = 1;
};

/// Seeded auto-labelled collection of one scene. The vessel starts docked,
/// backs out and explores random waypoints of the pre-docking area, and each
/// logged image is labelled with relative_pose(odometry, initial dock pose).
SceneRecording collect_scene(std::uint64_t scene_seed, int scene_index, const CollectionConfig& cfg,
                             const UsvParams& plant, const DisturbanceConfig& disturbance, const CameraModel& camera);

// -- augmentation ------------------------------------------------------------

struct AugmentationConfig {
  double gaussian_noise_std = 6.0;
  double pixel_dropout_fraction = 0.02;
  int motion_blur_max_kernel = 7;          // pixels; <= 1 disables
  double motion_blur_angle_range_deg = 180.0;
  double brightness_delta_range = 30.0;    // +- gray levels
  double contrast_min = 0.7;
  double contrast_max = 1.3;
  double fog_min = 0.0;
  double fog_max = 0.5;
  double rain_streak_density = 20.0;       // streaks per image
  std::uint64_t seed = 11;
  int copies = 1;

  void validate() const;
  static AugmentationConfig identity();
};

GrayImage augment_image(const GrayImage& img, const AugmentationConfig& cfg, std::uint64_t draw_seed);

/// Copy of the sample flagged as augmented, id suffixed "_aug<copy>";
/// labels and metadata untouched. The image is produced by augment_image.
Sample augment(const Sample& sample, int copy);
/// Per-sample, per-copy seed for augment_image.
std::uint64_t augmentation_draw_seed(const Sample& source, int copy);

// -- manifests ---------------------------------------------------------------

/// Train takes floor(fraction * groups); an augmented copy stays on the same
/// side as its source sample.
std::pair<DatasetManifest, DatasetManifest> split(const DatasetManifest& manifest, double train_fraction,
                                                  std::uint64_t seed);

DatasetStats dataset_stats(const DatasetManifest& manifest);
/// Population std and linear-interpolated quartiles.
DatasetStats::Column column_stats(std::vector<double> values);

std::string source_id(const Sample& s);

std::string manifest_to_jsonl(const DatasetManifest& manifest);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);
std::string stats_csv(const DatasetStats& stats);

}  // namespace dockpilot
