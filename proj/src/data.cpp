#include "dockpilot/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "dockpilot/control.hpp"
#include "dockpilot/util.hpp"
#include "json.hpp"

namespace dockpilot {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;

/// Nearest unused pose to t within threshold; ties go to the earlier pose.
std::ptrdiff_t nearest_pose(const std::vector<PoseStamp>& poses, const std::vector<char>& used, double t,
                            double threshold) {
  auto it = std::lower_bound(poses.begin(), poses.end(), t - threshold,
                             [](const PoseStamp& p, double v) { return p.t < v; });
  std::ptrdiff_t best = -1;
  double best_dt = threshold;
  for (; it != poses.end() && it->t <= t + threshold; ++it) {
    const auto idx = it - poses.begin();
    if (used[idx]) continue;
    const double d = std::abs(it->t - t);
    if (d < best_dt || (best < 0 && d <= threshold)) {
      best = idx;
      best_dt = d;
    }
  }
  return best;
}
}  // namespace

std::vector<SyncedPair> approximate_time_pair(const std::vector<PoseStamp>& poses,
                                              const std::vector<ImageStamp>& images, double threshold) {
  std::vector<SyncedPair> out;
  std::vector<char> used(poses.size(), 0);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto j = nearest_pose(poses, used, images[i].t, threshold);
    if (j < 0) continue;
    used[j] = 1;
    out.push_back({i, static_cast<std::size_t>(j), images[i].t - poses[j].t});
  }
  return out;
}

SyncBuffer::SyncBuffer(double threshold) : threshold_(threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("SyncBuffer: threshold must be >= 0");
}

void SyncBuffer::push_pose(const PoseStamp& p) { poses_.push_back(p); }
void SyncBuffer::push_image(const ImageStamp& img) { images_.push_back(img); }

std::vector<std::pair<ImageStamp, PoseStamp>> SyncBuffer::drain() { return match(false); }
std::vector<std::pair<ImageStamp, PoseStamp>> SyncBuffer::flush() { return match(true); }

std::vector<std::pair<ImageStamp, PoseStamp>> SyncBuffer::match(bool final) {
  std::vector<std::pair<ImageStamp, PoseStamp>> out;
  std::size_t consumed = 0;
  const double newest = poses_.empty() ? -std::numeric_limits<double>::infinity() : poses_.back().t;
  std::vector<char> used(poses_.size(), 0);
  for (; consumed < images_.size(); ++consumed) {
    const ImageStamp& img = images_[consumed];
    if (!final && newest < img.t + threshold_) break;  // a closer pose may still arrive
    const auto j = nearest_pose(poses_, used, img.t, threshold_);
    if (j >= 0) {
      used[j] = 1;
      out.emplace_back(img, poses_[j]);
    }
  }
  images_.erase(images_.begin(), images_.begin() + static_cast<std::ptrdiff_t>(consumed));
  // drop used poses and poses too old for any future image
  const double horizon = images_.empty() ? newest - threshold_ : images_.front().t - threshold_;
  std::vector<PoseStamp> keep;
  for (std::size_t k = 0; k < poses_.size(); ++k)
    if (!used[k] && poses_[k].t >= horizon) keep.push_back(poses_[k]);
  poses_ = std::move(keep);
  return out;
}

void CollectionConfig::validate() const {
  scene.validate();
  if (scenes < 0 || samples_per_scene < 1) throw std::invalid_argument("collection: bad scene/sample counts");
  if (!(sim_rate_hz > 0.0) || !(camera_rate_hz > 0.0) || camera_rate_hz > sim_rate_hz)
    throw std::invalid_argument("collection: camera rate must be in (0, sim rate]");
  if (1.0 / sim_rate_hz > 0.1) throw std::invalid_argument("collection: sim rate below 10 Hz");
  if (!(log_interval > 0.0) || !(sync_threshold >= 0.0)) throw std::invalid_argument("collection: bad timing");
  if (!(area_min_radius > 0.0 && area_min_radius < area_max_radius))
    throw std::invalid_argument("collection: bad pre-docking annulus");
  if (!(speed_min >= 0.0 && speed_min <= speed_max)) throw std::invalid_argument("collection: bad speed range");
  if (image_side < 16) throw std::invalid_argument("collection: image_side must be >= 16");
}

namespace {

struct Waypoint {
  double x = 0.0, y = 0.0;  // world
  double speed = 0.2;
  double started = 0.0;
};

/// Segment p->q against the dock footprint (dock frame, inflated).
bool crosses_dock(const DockScene& scene, const Pose2& p_world, double qx_world, double qy_world) {
  const Pose2 a = relative_pose(scene.dock_pose, p_world);
  const Pose2 b = relative_pose(scene.dock_pose, Pose2(qx_world, qy_world, 0.0));
  const double half = 0.5 * scene.outer_side;
  const double x_lo = -half - 0.3, x_hi = half + 0.6, y_lo = -half - 0.6, y_hi = half + 0.6;
  constexpr int kSteps = 64;
  for (int k = 0; k <= kSteps; ++k) {
    const double s = double(k) / kSteps;
    const double x = a.x() + s * (b.x() - a.x()), y = a.y() + s * (b.y() - a.y());
    if (x > x_lo && x < x_hi && y > y_lo && y < y_hi) {
      // the open mouth of the U is fair game
      const bool in_mouth = std::abs(y) < 0.5 * scene.docking_area_side - 0.3 && x < 0.5 * scene.docking_area_side;
      if (!in_mouth) return true;
    }
  }
  return false;
}

class ExplorationPolicy {
 public:
  ExplorationPolicy(const CollectionConfig& cfg, const DockScene& scene, const UsvParams& plant, std::mt19937_64& rng)
      : cfg_(cfg), scene_(scene), plant_(plant), rng_(rng) {
    // back straight out of the dock first
    const auto exit = scene.dock_pose.transform_point(-2.5, 0.0);
    wp_ = {exit[0], exit[1], 0.2, 0.0};
  }

  PwmCommand command(const UsvState& s) {
    const double dx = wp_.x - s.pose.x(), dy = wp_.y - s.pose.y();
    const double dist = std::hypot(dx, dy);
    if (dist < 0.4 || s.time - wp_.started > cfg_.waypoint_timeout) next_waypoint(s);

    const double tx = wp_.x - s.pose.x(), ty = wp_.y - s.pose.y();
    const double travel = std::atan2(ty, tx);
    const double to_dock = std::atan2(scene_.dock_pose.y() - s.pose.y(), scene_.dock_pose.x() - s.pose.x());
    const bool forward = std::abs(normalize_angle(travel - to_dock)) <= 0.5 * std::numbers::pi;
    const double wanted = forward ? travel : travel + std::numbers::pi;
    const double cap = cfg_.max_view_offset_deg * kDegToRad;
    const double heading_des = to_dock + std::clamp(normalize_angle(wanted - to_dock), -cap, cap);
    const double heading_err = normalize_angle(heading_des - s.pose.theta());

    const double omega_des = std::clamp(1.2 * heading_err, -0.5, 0.5);
    const double along = std::cos(travel - s.pose.theta());
    const double v_des = std::clamp(wp_.speed * along * std::min(1.0, std::hypot(tx, ty)), -wp_.speed, wp_.speed);
    const double v_cmd = v_des + 1.0 * (v_des - s.twist.v);
    const double w_cmd = omega_des + 0.5 * (omega_des - s.twist.omega);
    const Thrusts t = inverse_kinematics(v_cmd, w_cmd, plant_.alpha, plant_.beta);
    return {clip_pwm(t.right / plant_.pwm_to_thrust_gain, -1.0, 1.0),
            clip_pwm(t.left / plant_.pwm_to_thrust_gain, -1.0, 1.0)};
  }

 private:
  void next_waypoint(const UsvState& s) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> excess(1.0 / cfg_.waypoint_radius_mean);
    const double max_r = cfg_.area_max_radius - 0.5;
    const double half = (cfg_.area_half_angle_deg - 5.0) * kDegToRad;
    for (int tries = 0; tries < 64; ++tries) {
      double px, py;
      if (unit(rng_) < 0.15) {
        // slow pass in front of the mouth, on the dock axis
        px = -(cfg_.area_min_radius + unit(rng_) * 1.0);
        py = (unit(rng_) - 0.5) * 0.4;
      } else {
        const double r = std::min(cfg_.waypoint_min_radius + excess(rng_), max_r);
        const double a = std::numbers::pi + (2.0 * unit(rng_) - 1.0) * half;
        px = r * std::cos(a);
        py = r * std::sin(a);
      }
      const auto w = scene_.dock_pose.transform_point(px, py);
      if (crosses_dock(scene_, s.pose, w[0], w[1])) continue;
      const double speed = cfg_.speed_min + unit(rng_) * (cfg_.speed_max - cfg_.speed_min);
      wp_ = {w[0], w[1], speed, s.time};
      return;
    }
    // retreat along the axis
    const auto w = scene_.dock_pose.transform_point(-3.0, 0.0);
    wp_ = {w[0], w[1], 0.2, s.time};
  }

  const CollectionConfig& cfg_;
  const DockScene& scene_;
  const UsvParams& plant_;
  std::mt19937_64& rng_;
  Waypoint wp_;
};

}  // namespace

SceneRecording collect_scene(std::uint64_t scene_seed, int scene_index, const CollectionConfig& cfg,
                             const UsvParams& plant, const DisturbanceConfig& disturbance, const CameraModel& camera) {
  cfg.validate();
  plant.validate();
  const double dt = 1.0 / cfg.sim_rate_hz;
  const int frames_per_log = std::max(1, static_cast<int>(std::lround(cfg.log_interval * cfg.camera_rate_hz)));
  const long ticks =
      static_cast<long>(std::ceil((cfg.samples_per_scene - 1) * frames_per_log / cfg.camera_rate_hz * cfg.sim_rate_hz)) + 1;
  const FisheyeRenderer renderer(camera);
  char scene_id[32];
  std::snprintf(scene_id, sizeof scene_id, "scene_%03d", scene_index);

  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    std::mt19937_64 rng(scene_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> place(-cfg.dock_placement_range, cfg.dock_placement_range);
    std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
    const double dock_x = place(rng), dock_y = place(rng);
    SceneRecording rec;
    rec.scene_id = scene_id;
    rec.scene = cfg.scene;
    rec.scene.dock_pose = Pose2(dock_x, dock_y, heading(rng));
    rec.attempts = attempt + 1;

    DisturbanceConfig dcfg = disturbance;
    dcfg.seed = disturbance.seed ^ (scene_seed * 0xD1B54A32D192ED03ULL + static_cast<std::uint64_t>(attempt));
    Disturbance wind(dcfg);
    std::normal_distribution<double> drift_noise(0.0, 1.0);
    double drift_x = 0.0, drift_y = 0.0, drift_th = 0.0;

    ExplorationPolicy policy(cfg, rec.scene, plant, rng);
    UsvState state;
    state.pose = rec.scene.dock_pose;
    std::vector<PoseStamp> pose_stream;
    std::vector<ImageStamp> image_stream;
    pose_stream.reserve(ticks);
    rec.trajectory.reserve(ticks);
    std::size_t next_frame = 0;
    for (long n = 0; n < ticks; ++n) {
      if (n > 0) {
        const PwmCommand cmd = policy.command(state);
        state = step(plant, state, cmd, dt, wind.advance(dt));
        if (cfg.drift.enabled) {
          drift_x += cfg.drift.position_std * std::sqrt(dt) * drift_noise(rng);
          drift_y += cfg.drift.position_std * std::sqrt(dt) * drift_noise(rng);
          drift_th += cfg.drift.heading_std * std::sqrt(dt) * drift_noise(rng);
        }
      }
      state.time = n * dt;  // keep stamps on the exact tick grid
      rec.trajectory.push_back(state);
      const Pose2 odom(state.pose.x() + drift_x, state.pose.y() + drift_y, state.pose.theta() + drift_th);
      pose_stream.push_back({state.time, odom, std::abs(state.twist.v)});
      // camera exposures are triggered on odometry ticks
      const long frame_tick = std::lround(double(next_frame) * cfg.sim_rate_hz / cfg.camera_rate_hz);
      if (frame_tick == n) {
        image_stream.push_back({state.time, next_frame});
        ++next_frame;
      }
    }

    const auto pairs = approximate_time_pair(pose_stream, image_stream, cfg.sync_threshold);
    bool visible = true;
    const Pose2& initial_dock = rec.trajectory.front().pose;  // odometry origin == docked pose
    for (const auto& pr : pairs) {
      const ImageStamp& img = image_stream[pr.image_index];
      if (img.frame % frames_per_log != 0) continue;
      if (rec.samples.size() == static_cast<std::size_t>(cfg.samples_per_scene)) break;
      const long tick = std::lround(img.t * cfg.sim_rate_hz);
      const UsvState& truth = rec.trajectory[static_cast<std::size_t>(tick)];
      RenderOutput frame = renderer.render(rec.scene, truth.pose);
      if (frame.block_pixels < cfg.min_block_pixels) {
        visible = false;
        break;
      }
      const PoseStamp& odo = pose_stream[pr.pose_index];
      Sample s;
      char id[48];
      std::snprintf(id, sizeof id, "s%03d_%04zu", scene_index, rec.samples.size());
      s.id = id;
      s.image_ref = "images/" + s.id + ".pgm";
      s.label = relative_pose(odo.pose, initial_dock);
      s.meta.world_pose = truth.pose;
      s.meta.speed = odo.speed;
      s.meta.distance_to_dock = std::hypot(truth.pose.x() - rec.scene.dock_pose.x(), truth.pose.y() - rec.scene.dock_pose.y());
      s.meta.timestamp = img.t;
      s.meta.scene_id = rec.scene_id;
      rec.samples.push_back(std::move(s));
      rec.images.push_back(crop_resize(frame.image, cfg.image_side));
    }
    if (visible && rec.samples.size() == static_cast<std::size_t>(cfg.samples_per_scene)) return rec;
  }
  throw std::runtime_error(std::string("collect_scene: could not keep the dock visible in ") + scene_id);
}

void AugmentationConfig::validate() const {
  const bool ok = gaussian_noise_std >= 0.0 && pixel_dropout_fraction >= 0.0 && pixel_dropout_fraction <= 1.0 &&
                  motion_blur_max_kernel >= 0 && motion_blur_angle_range_deg >= 0.0 && brightness_delta_range >= 0.0 &&
                  contrast_min > 0.0 && contrast_min <= contrast_max && fog_min >= 0.0 && fog_min <= fog_max &&
                  fog_max <= 1.0 && rain_streak_density >= 0.0 && copies >= 0;
  if (!ok) throw std::invalid_argument("augmentation: ranges must be valid and non-negative");
}

AugmentationConfig AugmentationConfig::identity() {
  AugmentationConfig c;
  c.gaussian_noise_std = 0.0;
  c.pixel_dropout_fraction = 0.0;
  c.motion_blur_max_kernel = 0;
  c.motion_blur_angle_range_deg = 0.0;
  c.brightness_delta_range = 0.0;
  c.contrast_min = c.contrast_max = 1.0;
  c.fog_min = c.fog_max = 0.0;
  c.rain_streak_density = 0.0;
  return c;
}

namespace {

void motion_blur(std::vector<float>& px, int w, int h, int length, double angle) {
  if (length <= 1) return;
  const double ux = std::cos(angle), uy = std::sin(angle);
  std::vector<float> out(px.size());
  auto sample = [&](double x, double y) {
    x = std::clamp(x, 0.0, double(w - 1));
    y = std::clamp(y, 0.0, double(h - 1));
    const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const auto at = [&](int xx, int yy) { return double(px[static_cast<std::size_t>(yy) * w + xx]); };
    return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < length; ++k) {
        const double s = k - 0.5 * (length - 1);
        acc += sample(x + s * ux, y + s * uy);
      }
      out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc / length);
    }
  }
  px = std::move(out);
}

}  // namespace

GrayImage augment_image(const GrayImage& img, const AugmentationConfig& cfg, std::uint64_t draw_seed) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL ^ draw_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int w = img.width, h = img.height;
  std::vector<float> px(img.pixels.begin(), img.pixels.end());

  // photometric: contrast about mid-grey, then brightness
  const double contrast = cfg.contrast_min + unit(rng) * (cfg.contrast_max - cfg.contrast_min);
  const double brightness = (2.0 * unit(rng) - 1.0) * cfg.brightness_delta_range;
  if (contrast != 1.0 || brightness != 0.0)
    for (auto& p : px) p = static_cast<float>((p - 128.0) * contrast + 128.0 + brightness);

  // fog: bilinear 4x4 random field blended toward a bright haze
  const double fog = cfg.fog_min + unit(rng) * (cfg.fog_max - cfg.fog_min);
  if (fog > 0.0) {
    double grid[4][4];
    for (auto& row : grid)
      for (auto& g : row) g = 0.5 + 0.5 * unit(rng);
    for (int y = 0; y < h; ++y) {
      const double gy = 3.0 * y / std::max(1, h - 1);
      const int y0 = std::min(2, static_cast<int>(gy));
      const double fy = gy - y0;
      for (int x = 0; x < w; ++x) {
        const double gx = 3.0 * x / std::max(1, w - 1);
        const int x0 = std::min(2, static_cast<int>(gx));
        const double fx = gx - x0;
        const double field = (1 - fy) * ((1 - fx) * grid[y0][x0] + fx * grid[y0][x0 + 1]) +
                             fy * ((1 - fx) * grid[y0 + 1][x0] + fx * grid[y0 + 1][x0 + 1]);
        const double a = fog * field;
        float& p = px[static_cast<std::size_t>(y) * w + x];
        p = static_cast<float>(p * (1.0 - a) + 215.0 * a);
      }
    }
  }

  if (cfg.motion_blur_max_kernel > 1) {
    const int length = 1 + static_cast<int>(unit(rng) * cfg.motion_blur_max_kernel);
    const double angle = (2.0 * unit(rng) - 1.0) * cfg.motion_blur_angle_range_deg * kDegToRad;
    motion_blur(px, w, h, std::min(length, cfg.motion_blur_max_kernel), angle);
  }

  // rain: short bright near-vertical streaks
  const int streaks = static_cast<int>(std::lround(cfg.rain_streak_density));
  for (int k = 0; k < streaks; ++k) {
    const double x0 = unit(rng) * w, y0 = unit(rng) * h;
    const double len = (0.03 + 0.05 * unit(rng)) * h;
    const double slant = (unit(rng) - 0.5) * 0.4;
    const int n = std::max(1, static_cast<int>(len));
    for (int i = 0; i < n; ++i) {
      const int x = static_cast<int>(x0 + slant * i), y = static_cast<int>(y0 + i);
      if (x < 0 || x >= w || y < 0 || y >= h) break;
      float& p = px[static_cast<std::size_t>(y) * w + x];
      p = static_cast<float>(0.6 * p + 0.4 * 240.0);
    }
  }

  if (cfg.gaussian_noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.gaussian_noise_std);
    for (auto& p : px) p = static_cast<float>(p + noise(rng));
  }
  if (cfg.pixel_dropout_fraction > 0.0) {
    std::bernoulli_distribution drop(cfg.pixel_dropout_fraction);
    for (auto& p : px)
      if (drop(rng)) p = 0.0f;
  }

  GrayImage out(w, h);
  for (std::size_t i = 0; i < px.size(); ++i)
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(px[i]), 0, 255));
  return out;
}

Sample augment(const Sample& sample, int copy) {
  if (copy < 0) throw std::invalid_argument("augment: copy index must be >= 0");
  Sample out = sample;
  out.id = sample.id + "_aug" + std::to_string(copy);
  out.image_ref = "images/" + out.id + ".pgm";
  out.meta.augmented = true;
  return out;
}

std::uint64_t augmentation_draw_seed(const Sample& source, int copy) {
  return seed_mix(fnv1a64(source.id), static_cast<std::uint64_t>(copy));
}

std::string source_id(const Sample& s) {
  const auto pos = s.id.find("_aug");
  return pos == std::string::npos ? s.id : s.id.substr(0, pos);
}

std::pair<DatasetManifest, DatasetManifest> split(const DatasetManifest& manifest, double train_fraction,
                                                  std::uint64_t seed) {
  if (manifest.samples.empty()) throw std::invalid_argument("split: empty manifest");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("split: fraction must be in (0, 1)");
  // groups in order of first appearance
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::vector<const Sample*>> by_group;
  for (const auto& s : manifest.samples) {
    const auto [it, inserted] = group_of.try_emplace(source_id(s), by_group.size());
    if (inserted) by_group.emplace_back();
    by_group[it->second].push_back(&s);
  }
  std::vector<std::size_t> order(by_group.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * double(by_group.size())));
  DatasetManifest train, val;
  train.config_hash = val.config_hash = manifest.config_hash;
  train.root = val.root = manifest.root;
  // shuffled group order is kept, so any prefix of the training split is a random subset
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& target = k < n_train ? train : val;
    for (const Sample* s : by_group[order[k]]) target.samples.push_back(*s);
  }
  return {std::move(train), std::move(val)};
}

DatasetStats::Column column_stats(std::vector<double> values) {
  DatasetStats::Column c;
  if (values.empty()) return c;
  const double n = static_cast<double>(values.size());
  c.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - c.mean) * (v - c.mean);
  c.std = std::sqrt(ss / n);
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(values.size() - 1, lo + 1);
    return values[lo] + (pos - double(lo)) * (values[hi] - values[lo]);
  };
  c.q1 = quantile(0.25);
  c.median = quantile(0.5);
  c.q3 = quantile(0.75);
  return c;
}

DatasetStats dataset_stats(const DatasetManifest& manifest) {
  if (manifest.samples.empty()) throw std::invalid_argument("dataset_stats: empty manifest");
  std::vector<double> dist, speed;
  for (const auto& s : manifest.samples) {
    dist.push_back(s.meta.distance_to_dock);
    speed.push_back(s.meta.speed);
  }
  DatasetStats st;
  st.distance = column_stats(std::move(dist));
  st.speed = column_stats(std::move(speed));
  st.count = manifest.samples.size();
  return st;
}

std::string stats_csv(const DatasetStats& stats) {
  std::ostringstream os;
  os << "metric,mean,std,q1,median,q3\n";
  const auto row = [&](const char* name, const DatasetStats::Column& c) {
    os << name << ',' << fmt_num(c.mean) << ',' << fmt_num(c.std) << ',' << fmt_num(c.q1) << ',' << fmt_num(c.median)
       << ',' << fmt_num(c.q3) << '\n';
  };
  row("dist_m", stats.distance);
  row("speed_mps", stats.speed);
  return os.str();
}

std::string manifest_to_jsonl(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& s : manifest.samples) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["image"] = s.image_ref;
    j["dx_m"] = s.label.x();
    j["dy_m"] = s.label.y();
    j["dtheta_rad"] = s.label.theta();
    j["x_m"] = s.meta.world_pose.x();
    j["y_m"] = s.meta.world_pose.y();
    j["theta_rad"] = s.meta.world_pose.theta();
    j["speed_mps"] = s.meta.speed;
    j["dist_m"] = s.meta.distance_to_dock;
    j["t_s"] = s.meta.timestamp;
    j["scene"] = s.meta.scene_id;
    j["augmented"] = s.meta.augmented;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  write_file(path, manifest_to_jsonl(manifest));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Sample s;
      s.id = j.at("id").get<std::string>();
      s.image_ref = j.at("image").get<std::string>();
      s.label = Pose2(j.at("dx_m").get<double>(), j.at("dy_m").get<double>(), j.at("dtheta_rad").get<double>());
      s.meta.world_pose = Pose2(j.at("x_m").get<double>(), j.at("y_m").get<double>(), j.at("theta_rad").get<double>());
      s.meta.speed = j.at("speed_mps").get<double>();
      s.meta.distance_to_dock = j.at("dist_m").get<double>();
      s.meta.timestamp = j.at("t_s").get<double>();
      s.meta.scene_id = j.at("scene").get<std::string>();
      s.meta.augmented = j.at("augmented").get<bool>();
      m.samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const auto& s : m.samples) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw std::runtime_error("manifest " + path.string() + " has duplicate sample ids");
  return m;
}

}  // namespace dockpilot
