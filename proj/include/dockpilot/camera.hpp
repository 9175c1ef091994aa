#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "dockpilot/geometry.hpp"

namespace dockpilot {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double mean() const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Equidistant fisheye camera. Camera frame: x right, y down, z along the
/// optical axis; the optical axis is horizontal and points along the mount
/// heading.
struct CameraModel {
  int width = 848;
  int height = 800;
  double focal_coefficient = 0.0;  // pixels per radian of incidence
  Pose2 mount{0.45, 0.0, 0.0};     // camera relative to the vessel base
  double height_above_water = 0.25;

  /// Focal coefficient chosen so the image diagonal spans diagonal_fov_deg.
  static CameraModel with_diagonal_fov(int width, int height, double diagonal_fov_deg);
  static CameraModel standard() { return with_diagonal_fov(848, 800, 173.0); }

  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }
  double half_diagonal() const;
  double diagonal_fov_deg() const;
  double max_incidence() const;  // half the diagonal FOV, radians

  void validate() const;
};

std::optional<PixelCoord> project_point(const CameraModel& camera, const Vec3& point_cam);
/// Unit ray through an image position (inverse of project_point).
Vec3 unproject(const CameraModel& camera, double u, double v);

/// Axis-aligned (in the dock frame) floating block.
struct Block {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
};

/// U-shaped dock of 16 blocks. The dock frame origin is the centre of the
/// docking area and +x points from the opening toward the closed end, so a
/// vessel docked bow-first at the origin has heading zero in this frame.
struct DockScene {
  Pose2 dock_pose;
  std::vector<Block> blocks;
  double block_height = 0.3;  // above the waterline
  double docking_area_side = 1.5;
  double outer_side = 2.5;
  std::uint8_t water_brightness = 60;
  std::uint8_t sky_brightness = 180;
  std::uint8_t block_brightness = 230;
  double x_face_shade = 1.0;  // side faces relative to the top face
  double y_face_shade = 1.0;

  static DockScene standard(const Pose2& dock_pose);
  double opening_x() const { return -0.5 * outer_side; }
  void validate() const;
};

struct RenderOutput {
  GrayImage image;
  std::size_t block_pixels = 0;
};

/// Ray-casting renderer. Caches the per-pixel ray table and the sky/water
/// background, which depend only on the camera.
class FisheyeRenderer {
 public:
  explicit FisheyeRenderer(CameraModel camera);

  const CameraModel& camera() const { return camera_; }

  /// Culls each block to its projected bounding box; parallel over rows.
  RenderOutput render(const DockScene& scene, const Pose2& usv_pose) const;
  /// Brute force: every pixel against every block, single thread.
  RenderOutput render_reference(const DockScene& scene, const Pose2& usv_pose) const;

 private:
  CameraModel camera_;
  std::vector<float> rays_;  // 3 floats per pixel, camera frame
  GrayImage background_;
};

GrayImage render(const CameraModel& camera, const DockScene& scene, const Pose2& usv_pose);

/// Centre-crop to the largest square, then area-average down to side x side.
GrayImage crop_resize(const GrayImage& img, int side);

/// Pixels scaled to [0, 1].
std::vector<float> to_unit_floats(const GrayImage& img);

}  // namespace dockpilot
