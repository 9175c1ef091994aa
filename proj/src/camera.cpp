#include "dockpilot/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace dockpilot {

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
  if (w < 0 || h < 0) throw std::invalid_argument("GrayImage: negative size");
}

double GrayImage::mean() const {
  if (pixels.empty()) return 0.0;
  double sum = 0.0;
  for (auto p : pixels) sum += p;
  return sum / static_cast<double>(pixels.size());
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {
int read_pgm_int(std::istream& in, const std::filesystem::path& path) {
  in >> std::ws;
  while (in.peek() == '#') {
    std::string comment;
    std::getline(in, comment);
    in >> std::ws;
  }
  int value = -1;
  if (!(in >> value)) throw std::runtime_error("malformed PGM header in " + path.string());
  return value;
}
}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("not a binary PGM: " + path.string());
  const int w = read_pgm_int(in, path);
  const int h = read_pgm_int(in, path);
  const int maxval = read_pgm_int(in, path);
  if (w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("unsupported PGM in " + path.string());
  in.get();  // single whitespace before raster
  GrayImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw std::runtime_error("truncated PGM raster in " + path.string());
  return img;
}

CameraModel CameraModel::with_diagonal_fov(int width, int height, double diagonal_fov_deg) {
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  const double half_fov = 0.5 * diagonal_fov_deg * std::numbers::pi / 180.0;
  cam.focal_coefficient = cam.half_diagonal() / half_fov;
  cam.validate();
  return cam;
}

double CameraModel::half_diagonal() const { return 0.5 * std::hypot(double(width), double(height)); }

double CameraModel::max_incidence() const { return half_diagonal() / focal_coefficient; }

double CameraModel::diagonal_fov_deg() const { return 2.0 * max_incidence() * 180.0 / std::numbers::pi; }

void CameraModel::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("camera: image size must be positive");
  if (!(focal_coefficient > 0.0)) throw std::invalid_argument("camera: focal_coefficient must be > 0");
  if (max_incidence() >= 0.5 * std::numbers::pi)
    throw std::invalid_argument("camera: diagonal field of view must stay below 180 degrees");
  if (!(height_above_water > 0.0)) throw std::invalid_argument("camera: height_above_water must be > 0");
}

namespace {

struct Projected {
  double u, v, incidence;
};

Projected project_unclamped(const CameraModel& cam, const Vec3& p) {
  const double rho = std::hypot(p.x, p.y);
  const double incidence = std::atan2(rho, p.z);
  if (rho == 0.0) return {cam.cx(), cam.cy(), incidence};
  const double r = cam.focal_coefficient * incidence;
  return {cam.cx() + r * p.x / rho, cam.cy() + r * p.y / rho, incidence};
}

/// Camera placement expressed in the dock frame.
struct CameraInDock {
  double x, y, z, cos_h, sin_h;
};

CameraInDock place_camera(const CameraModel& cam, const DockScene& scene, const Pose2& usv_pose) {
  const Pose2 cam_world = compose(usv_pose, cam.mount);
  const Pose2 cam_dock = relative_pose(scene.dock_pose, cam_world);
  return {cam_dock.x(), cam_dock.y(), cam.height_above_water, std::cos(cam_dock.theta()), std::sin(cam_dock.theta())};
}

/// Camera-frame direction (right, down, forward) to dock frame.
inline void ray_to_dock(const CameraInDock& c, float rx, float ry, float rz, double& dx, double& dy, double& dz) {
  const double fwd = rz, left = -rx;
  dx = c.cos_h * fwd - c.sin_h * left;
  dy = c.sin_h * fwd + c.cos_h * left;
  dz = -ry;
}

/// Dock-frame point to camera frame.
Vec3 dock_to_camera(const CameraInDock& c, double px, double py, double pz) {
  const double ox = px - c.x, oy = py - c.y;
  const double fwd = c.cos_h * ox + c.sin_h * oy;
  const double left = -c.sin_h * ox + c.cos_h * oy;
  return {-left, -(pz - c.z), fwd};
}

enum class Face : std::uint8_t { none, x_side, y_side, top };

/// Slab intersection; returns entry distance or +inf.
inline double intersect_block(const Block& b, double height, const CameraInDock& c, double dx, double dy, double dz,
                              Face& face) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double t_near = -kInf, t_far = kInf;
  Face entry = Face::none;
  const double origin[3] = {c.x, c.y, c.z};
  const double dir[3] = {dx, dy, dz};
  const double lo[3] = {b.x_min, b.y_min, 0.0};
  const double hi[3] = {b.x_max, b.y_max, height};
  constexpr Face faces[3] = {Face::x_side, Face::y_side, Face::top};
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return kInf;
      continue;
    }
    double t0 = (lo[a] - origin[a]) / dir[a];
    double t1 = (hi[a] - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      entry = faces[a];
    }
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return kInf;
  }
  if (t_far <= 0.0) return kInf;
  if (t_near <= 0.0) {
    face = Face::top;  // camera inside the block
    return 0.0;
  }
  face = entry;
  return t_near;
}

std::uint8_t shade(const DockScene& scene, Face face) {
  switch (face) {
    case Face::top:
      return scene.block_brightness;
    case Face::x_side:
      return static_cast<std::uint8_t>(std::lround(scene.x_face_shade * scene.block_brightness));
    case Face::y_side:
      return static_cast<std::uint8_t>(std::lround(scene.y_face_shade * scene.block_brightness));
    case Face::none:
      break;
  }
  return 0;
}

struct PixelRect {
  int x0, x1, y0, y1;  // half-open
  bool empty() const { return x0 >= x1 || y0 >= y1; }
};

PixelRect block_footprint(const CameraModel& cam, const CameraInDock& c, const Block& b, double height) {
  constexpr int kSamples = 16;
  constexpr double kBehind = 2.6;  // rad; projection wraps near the rear axis
  const PixelRect full{0, cam.width, 0, cam.height};
  const double xs[2] = {b.x_min, b.x_max}, ys[2] = {b.y_min, b.y_max}, zs[2] = {0.0, height};
  double u_min = std::numeric_limits<double>::infinity(), u_max = -u_min, v_min = u_min, v_max = -u_min;
  auto visit = [&](double px, double py, double pz) {
    const Projected p = project_unclamped(cam, dock_to_camera(c, px, py, pz));
    if (p.incidence > kBehind) return false;
    u_min = std::min(u_min, p.u);
    u_max = std::max(u_max, p.u);
    v_min = std::min(v_min, p.v);
    v_max = std::max(v_max, p.v);
    return true;
  };
  // 12 box edges: vary one coordinate with the other two at their extremes
  for (int axis = 0; axis < 3; ++axis) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k <= kSamples; ++k) {
          const double s = double(k) / kSamples;
          double p[3];
          const double* ranges[3] = {xs, ys, zs};
          const int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;
          p[axis] = ranges[axis][0] + s * (ranges[axis][1] - ranges[axis][0]);
          p[o1] = ranges[o1][i];
          p[o2] = ranges[o2][j];
          if (!visit(p[0], p[1], p[2])) return full;
        }
      }
    }
  }
  constexpr double kMargin = 3.0;
  PixelRect r;
  r.x0 = std::max(0, static_cast<int>(std::floor(u_min - kMargin)));
  r.x1 = std::min(cam.width, static_cast<int>(std::ceil(u_max + kMargin)));
  r.y0 = std::max(0, static_cast<int>(std::floor(v_min - kMargin)));
  r.y1 = std::min(cam.height, static_cast<int>(std::ceil(v_max + kMargin)));
  return r;
}

}  // namespace

std::optional<PixelCoord> project_point(const CameraModel& camera, const Vec3& point_cam) {
  const Projected p = project_unclamped(camera, point_cam);
  if (p.incidence > camera.max_incidence() + 1e-12) return std::nullopt;
  return PixelCoord{p.u, p.v};
}

Vec3 unproject(const CameraModel& camera, double u, double v) {
  const double du = u - camera.cx(), dv = v - camera.cy();
  const double r = std::hypot(du, dv);
  if (r == 0.0) return {0.0, 0.0, 1.0};
  const double incidence = r / camera.focal_coefficient;
  const double s = std::sin(incidence);
  return {s * du / r, s * dv / r, std::cos(incidence)};
}

DockScene DockScene::standard(const Pose2& dock_pose) {
  DockScene scene;
  scene.dock_pose = dock_pose;
  const double half_outer = 0.5 * scene.outer_side;  // 1.25
  const double half_area = 0.5 * scene.docking_area_side;  // 0.75
  constexpr double kGap = 0.01;  // half of the seam between neighbouring blocks
  // side walls: 6 blocks each along x in [-1.25, 1.25]
  constexpr int kSideBlocks = 6;
  const double side_len = scene.outer_side / kSideBlocks;
  for (int wall = 0; wall < 2; ++wall) {
    const double y_lo = wall == 0 ? half_area : -half_outer;
    const double y_hi = wall == 0 ? half_outer : -half_area;
    for (int i = 0; i < kSideBlocks; ++i) {
      const double x_lo = -half_outer + i * side_len;
      scene.blocks.push_back({x_lo + kGap, x_lo + side_len - kGap, y_lo + kGap, y_hi - kGap});
    }
  }
  // closed end: 4 blocks spanning the docking-area width
  constexpr int kEndBlocks = 4;
  const double end_len = scene.docking_area_side / kEndBlocks;
  for (int i = 0; i < kEndBlocks; ++i) {
    const double y_lo = -half_area + i * end_len;
    scene.blocks.push_back({half_area + kGap, half_outer - kGap, y_lo + kGap, y_lo + end_len - kGap});
  }
  return scene;
}

void DockScene::validate() const {
  if (!(docking_area_side > 0.0) || !(docking_area_side < outer_side))
    throw std::invalid_argument("scene: docking area must lie strictly inside the outer extent");
  if (!(block_height > 0.0)) throw std::invalid_argument("scene: block_height must be > 0");
  if (!(x_face_shade >= 0.0 && x_face_shade <= 1.0 && y_face_shade >= 0.0 && y_face_shade <= 1.0))
    throw std::invalid_argument("scene: face shades must be in [0, 1]");
  const double h = 0.5 * docking_area_side;
  for (const auto& b : blocks) {
    if (!(b.x_min < b.x_max && b.y_min < b.y_max)) throw std::invalid_argument("scene: degenerate block");
    const bool overlaps = b.x_min < h && b.x_max > -h && b.y_min < h && b.y_max > -h;
    if (overlaps) throw std::invalid_argument("scene: block overlaps the docking area");
  }
}

FisheyeRenderer::FisheyeRenderer(CameraModel camera) : camera_(camera) {
  camera_.validate();
  const std::size_t n = static_cast<std::size_t>(camera_.width) * camera_.height;
  rays_.resize(3 * n);
  background_ = GrayImage(camera_.width, camera_.height);
  for (int y = 0; y < camera_.height; ++y) {
    for (int x = 0; x < camera_.width; ++x) {
      const Vec3 d = unproject(camera_, x + 0.5, y + 0.5);
      const std::size_t i = static_cast<std::size_t>(y) * camera_.width + x;
      rays_[3 * i] = static_cast<float>(d.x);
      rays_[3 * i + 1] = static_cast<float>(d.y);
      rays_[3 * i + 2] = static_cast<float>(d.z);
    }
  }
}

RenderOutput FisheyeRenderer::render(const DockScene& scene, const Pose2& usv_pose) const {
  // background brightness is stored per scene, so fill it here
  const int w = camera_.width, h = camera_.height;
  RenderOutput out{GrayImage(w, h), 0};
  for (std::size_t i = 0; i < out.image.pixels.size(); ++i)
    out.image.pixels[i] = rays_[3 * i + 1] > 0.0f ? scene.water_brightness : scene.sky_brightness;

  const CameraInDock c = place_camera(camera_, scene, usv_pose);
  std::vector<double> depth(out.image.pixels.size(), std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> hit(out.image.pixels.size(), 0);
  for (const Block& b : scene.blocks) {
    const PixelRect rect = block_footprint(camera_, c, b, scene.block_height);
    if (rect.empty()) continue;
#pragma omp parallel for schedule(static)
    for (int y = rect.y0; y < rect.y1; ++y) {
      for (int x = rect.x0; x < rect.x1; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        double dx, dy, dz;
        ray_to_dock(c, rays_[3 * i], rays_[3 * i + 1], rays_[3 * i + 2], dx, dy, dz);
        Face face = Face::none;
        const double t = intersect_block(b, scene.block_height, c, dx, dy, dz, face);
        if (t < depth[i]) {
          depth[i] = t;
          hit[i] = 1;
          out.image.pixels[i] = shade(scene, face);
        }
      }
    }
  }
  for (auto v : hit) out.block_pixels += v;
  return out;
}

RenderOutput FisheyeRenderer::render_reference(const DockScene& scene, const Pose2& usv_pose) const {
  const int w = camera_.width, h = camera_.height;
  RenderOutput out{GrayImage(w, h), 0};
  const CameraInDock c = place_camera(camera_, scene, usv_pose);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double dx, dy, dz;
      ray_to_dock(c, rays_[3 * i], rays_[3 * i + 1], rays_[3 * i + 2], dx, dy, dz);
      double best = std::numeric_limits<double>::infinity();
      Face best_face = Face::none;
      for (const Block& b : scene.blocks) {
        Face face = Face::none;
        const double t = intersect_block(b, scene.block_height, c, dx, dy, dz, face);
        if (t < best) {
          best = t;
          best_face = face;
        }
      }
      if (best_face != Face::none) {
        out.image.pixels[i] = shade(scene, best_face);
        ++out.block_pixels;
      } else {
        out.image.pixels[i] = rays_[3 * i + 1] > 0.0f ? scene.water_brightness : scene.sky_brightness;
      }
    }
  }
  return out;
}

GrayImage render(const CameraModel& camera, const DockScene& scene, const Pose2& usv_pose) {
  return FisheyeRenderer(camera).render(scene, usv_pose).image;
}

namespace {
/// Fractional coverage of source cells by each destination cell along one axis.
struct AxisWeights {
  std::vector<int> first;
  std::vector<std::vector<double>> weights;
};

AxisWeights area_weights(int src, int dst) {
  AxisWeights aw;
  const double scale = double(src) / dst;
  for (int j = 0; j < dst; ++j) {
    const double lo = j * scale, hi = (j + 1) * scale;
    const int i0 = static_cast<int>(std::floor(lo));
    const int i1 = std::min(src, static_cast<int>(std::ceil(hi)));
    aw.first.push_back(i0);
    std::vector<double> w;
    for (int i = i0; i < i1; ++i) w.push_back(std::min(hi, double(i + 1)) - std::max(lo, double(i)));
    aw.weights.push_back(std::move(w));
  }
  return aw;
}
}  // namespace

GrayImage crop_resize(const GrayImage& img, int side) {
  const int square = std::min(img.width, img.height);
  if (side < 1) throw std::invalid_argument("crop_resize: side must be positive");
  if (side > square)
    throw std::invalid_argument("crop_resize: side " + std::to_string(side) + " exceeds source square " +
                                std::to_string(square));
  const int x_off = (img.width - square) / 2, y_off = (img.height - square) / 2;
  const AxisWeights aw = area_weights(square, side);
  const double area = (double(square) / side) * (double(square) / side);

  // separable: rows first into a float buffer
  std::vector<double> rows(static_cast<std::size_t>(square) * side, 0.0);
  for (int y = 0; y < square; ++y) {
    for (int j = 0; j < side; ++j) {
      double acc = 0.0;
      const auto& w = aw.weights[j];
      for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * img.at(x_off + aw.first[j] + int(k), y_off + y);
      rows[static_cast<std::size_t>(y) * side + j] = acc;
    }
  }
  GrayImage out(side, side);
  for (int i = 0; i < side; ++i) {
    const auto& w = aw.weights[i];
    for (int j = 0; j < side; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * rows[static_cast<std::size_t>(aw.first[i] + int(k)) * side + j];
      out.at(j, i) = static_cast<std::uint8_t>(std::clamp<long>(std::lround(acc / area), 0, 255));
    }
  }
  return out;
}

std::vector<float> to_unit_floats(const GrayImage& img) {
  std::vector<float> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.pixels[i] / 255.0f;
  return out;
}

}  // namespace dockpilot
