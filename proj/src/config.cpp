#include "dockpilot/config.hpp"

#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "dockpilot/util.hpp"

namespace dockpilot {

namespace {

using Ref = std::variant<double*, int*, std::uint64_t*, bool*, std::vector<int>*>;
static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t keys are bound as uint64");

struct Field {
  std::string section;
  std::string key;
  Ref ref;
};

void add_gains(std::vector<Field>& f, const std::string& name, PidGains& g) {
  f.push_back({"controller", name + "_kp", &g.kp});
  f.push_back({"controller", name + "_ki", &g.ki});
  f.push_back({"controller", name + "_kd", &g.kd});
  f.push_back({"controller", name + "_integral_limit", &g.integral_limit});
  f.push_back({"controller", name + "_output_limit", &g.output_limit});
}

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f;
  auto& p = c.plant;
  f.insert(f.end(), {{"plant", "alpha", &p.alpha},
                     {"plant", "beta", &p.beta},
                     {"plant", "actuator_time_constant", &p.actuator_time_constant},
                     {"plant", "hull_drag_time_constant", &p.hull_drag_time_constant},
                     {"plant", "pwm_to_thrust_gain", &p.pwm_to_thrust_gain},
                     {"plant", "max_thrust", &p.max_thrust}});
  auto& d = c.disturbance;
  f.insert(f.end(), {{"disturbance", "wind_force_std", &d.wind_force_std},
                     {"disturbance", "wind_torque_std", &d.wind_torque_std},
                     {"disturbance", "correlation_time", &d.correlation_time},
                     {"disturbance", "seed", &d.seed}});
  auto& cam = c.camera;
  f.insert(f.end(), {{"camera", "width", &cam.width},
                     {"camera", "height", &cam.height},
                     {"camera", "diagonal_fov_deg", &cam.diagonal_fov_deg},
                     {"camera", "mount_x", &cam.mount_x},
                     {"camera", "mount_y", &cam.mount_y},
                     {"camera", "mount_yaw_rad", &cam.mount_yaw_rad},
                     {"camera", "height_above_water", &cam.height_above_water}});
  auto& s = c.scene;
  f.insert(f.end(), {{"scene", "block_height", &s.block_height},
                     {"scene", "water_brightness", &s.water_brightness},
                     {"scene", "sky_brightness", &s.sky_brightness},
                     {"scene", "block_brightness", &s.block_brightness},
                     {"scene", "x_face_shade", &s.x_face_shade},
                     {"scene", "y_face_shade", &s.y_face_shade}});
  auto& col = c.collection;
  f.insert(f.end(), {{"collection", "scenes", &col.scenes},
                     {"collection", "samples_per_scene", &col.samples_per_scene},
                     {"collection", "seed", &col.seed},
                     {"collection", "sim_rate_hz", &col.sim_rate_hz},
                     {"collection", "camera_rate_hz", &col.camera_rate_hz},
                     {"collection", "log_interval", &col.log_interval},
                     {"collection", "sync_threshold", &col.sync_threshold},
                     {"collection", "dock_placement_range", &col.dock_placement_range},
                     {"collection", "area_min_radius", &col.area_min_radius},
                     {"collection", "area_max_radius", &col.area_max_radius},
                     {"collection", "area_half_angle_deg", &col.area_half_angle_deg},
                     {"collection", "waypoint_radius_mean", &col.waypoint_radius_mean},
                     {"collection", "waypoint_min_radius", &col.waypoint_min_radius},
                     {"collection", "speed_min", &col.speed_min},
                     {"collection", "speed_max", &col.speed_max},
                     {"collection", "max_view_offset_deg", &col.max_view_offset_deg},
                     {"collection", "waypoint_timeout", &col.waypoint_timeout},
                     {"collection", "min_block_pixels", &col.min_block_pixels},
                     {"collection", "image_side", &col.image_side},
                     {"collection", "max_retries", &col.max_retries},
                     {"collection", "drift_enabled", &col.drift.enabled},
                     {"collection", "drift_position_std", &col.drift.position_std},
                     {"collection", "drift_heading_std", &col.drift.heading_std}});
  auto& a = c.augmentation;
  f.insert(f.end(), {{"augmentation", "gaussian_noise_std", &a.gaussian_noise_std},
                     {"augmentation", "pixel_dropout_fraction", &a.pixel_dropout_fraction},
                     {"augmentation", "motion_blur_max_kernel", &a.motion_blur_max_kernel},
                     {"augmentation", "motion_blur_angle_range_deg", &a.motion_blur_angle_range_deg},
                     {"augmentation", "brightness_delta_range", &a.brightness_delta_range},
                     {"augmentation", "contrast_min", &a.contrast_min},
                     {"augmentation", "contrast_max", &a.contrast_max},
                     {"augmentation", "fog_min", &a.fog_min},
                     {"augmentation", "fog_max", &a.fog_max},
                     {"augmentation", "rain_streak_density", &a.rain_streak_density},
                     {"augmentation", "seed", &a.seed},
                     {"augmentation", "copies", &a.copies}});
  auto& n = c.network;
  f.insert(f.end(), {{"network", "input_side", &n.input_side},
                     {"network", "conv_filters", &n.conv_filters},
                     {"network", "fc_hidden", &n.fc_hidden},
                     {"network", "dropout_rate", &n.dropout_rate}});
  auto& t = c.training;
  f.insert(f.end(), {{"training", "learning_rate", &t.learning_rate},
                     {"training", "momentum", &t.momentum},
                     {"training", "batch_size", &t.batch_size},
                     {"training", "epochs", &t.epochs},
                     {"training", "seed", &t.seed},
                     {"training", "train_fraction", &t.train_fraction}});
  auto& k = c.controller;
  add_gains(f, "distance", k.distance);
  add_gains(f, "bearing", k.bearing);
  add_gains(f, "heading", k.heading);
  add_gains(f, "surge", k.surge);
  add_gains(f, "yaw", k.yaw);
  f.insert(f.end(), {{"controller", "pwm_min", &k.pwm_min},
                     {"controller", "pwm_max", &k.pwm_max},
                     {"controller", "rate_hz", &k.rate_hz},
                     {"controller", "prediction_rate_hz", &k.prediction_rate_hz},
                     {"controller", "position_tolerance", &k.position_tolerance},
                     {"controller", "heading_tolerance_rad", &k.heading_tolerance},
                     {"controller", "switch_radius", &k.switch_radius},
                     {"controller", "lookahead", &k.lookahead},
                     {"controller", "align_cross_track_gain", &k.align_cross_track_gain},
                     {"controller", "entry_standoff", &k.entry_standoff},
                     {"controller", "entry_cone_slope", &k.entry_cone_slope},
                     {"controller", "timeout", &k.timeout}});
  auto& tr = c.trial;
  f.insert(f.end(), {{"trial", "start_range_min", &tr.start_range_min},
                     {"trial", "start_range_max", &tr.start_range_max},
                     {"trial", "start_bearing_max_rad", &tr.start_bearing_max},
                     {"trial", "start_heading_jitter_rad", &tr.start_heading_jitter},
                     {"trial", "sim_dt", &tr.sim_dt},
                     {"trial", "hull_length", &tr.hull_length},
                     {"trial", "hull_width", &tr.hull_width},
                     {"trial", "collision_heading_rad", &tr.collision_heading},
                     {"trial", "min_block_pixels", &tr.min_block_pixels}});
  auto& e = c.evaluation;
  f.insert(f.end(), {{"evaluation", "data_eff_sizes", &e.data_eff_sizes},
                     {"evaluation", "data_eff_epochs", &e.data_eff_epochs},
                     {"evaluation", "data_eff_seed", &e.data_eff_seed},
                     {"evaluation", "trials", &e.trials},
                     {"evaluation", "trial_seed", &e.trial_seed},
                     {"evaluation", "paired_trials", &e.paired_trials},
                     {"evaluation", "oracle", &e.oracle},
                     {"evaluation", "trial_disturbance", &e.trial_disturbance}});
  return f;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
bool parse_number(std::string_view text, N& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if constexpr (std::is_unsigned_v<N>) {
    if (!text.empty() && text.front() == '-') return false;
  }
  if (!text.empty() && text.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

struct Assigner {
  std::string_view text;
  bool operator()(double* p) const { return parse_number(text, *p); }
  bool operator()(int* p) const { return parse_number(text, *p); }
  bool operator()(std::uint64_t* p) const { return parse_number(text, *p); }
  bool operator()(bool* p) const {
    if (text == "true") *p = true;
    else if (text == "false") *p = false;
    else return false;
    return true;
  }
  bool operator()(std::vector<int>* p) const {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']') return false;
    std::vector<int> out;
    std::string_view body = trim(text.substr(1, text.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      int v = 0;
      if (!parse_number(item, v)) return false;
      out.push_back(v);
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
      if (body.empty()) return false;
    }
    *p = std::move(out);
    return true;
  }
};

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";  // keep floats visibly floats; "inf"/"nan" pass
  return s;
}

struct Printer {
  std::string operator()(const double* p) const { return shortest(*p); }
  std::string operator()(const int* p) const { return std::to_string(*p); }
  std::string operator()(const std::uint64_t* p) const { return std::to_string(*p); }
  std::string operator()(const bool* p) const { return *p ? "true" : "false"; }
  std::string operator()(const std::vector<int>* p) const {
    std::string s = "[";
    for (std::size_t i = 0; i < p->size(); ++i) s += (i ? ", " : "") + std::to_string((*p)[i]);
    return s + "]";
  }
};

}  // namespace

void EvaluationConfig::validate() const {
  if (data_eff_sizes.empty()) throw std::invalid_argument("evaluation: data_eff_sizes must not be empty");
  for (std::size_t i = 0; i < data_eff_sizes.size(); ++i) {
    if (data_eff_sizes[i] < 1) throw std::invalid_argument("evaluation: data_eff_sizes must be positive");
    if (i > 0 && data_eff_sizes[i] <= data_eff_sizes[i - 1])
      throw std::invalid_argument("evaluation: data_eff_sizes must be strictly increasing");
  }
  if (data_eff_epochs < 1) throw std::invalid_argument("evaluation: data_eff_epochs must be >= 1");
  if (trials < 0 || paired_trials < 0) throw std::invalid_argument("evaluation: trial counts must be >= 0");
}

CameraModel RunConfig::camera_model() const {
  CameraModel cam = CameraModel::with_diagonal_fov(camera.width, camera.height, camera.diagonal_fov_deg);
  cam.mount = Pose2(camera.mount_x, camera.mount_y, camera.mount_yaw_rad);
  if (!(camera.height_above_water > 0.0)) throw std::invalid_argument("camera: height_above_water must be > 0");
  cam.height_above_water = camera.height_above_water;
  return cam;
}

DockScene RunConfig::scene_template() const {
  DockScene s = DockScene::standard(Pose2{});
  for (int b : {scene.water_brightness, scene.sky_brightness, scene.block_brightness})
    if (b < 0 || b > 255) throw std::invalid_argument("scene: brightness values must be in [0, 255]");
  s.block_height = scene.block_height;
  s.water_brightness = static_cast<std::uint8_t>(scene.water_brightness);
  s.sky_brightness = static_cast<std::uint8_t>(scene.sky_brightness);
  s.block_brightness = static_cast<std::uint8_t>(scene.block_brightness);
  s.x_face_shade = scene.x_face_shade;
  s.y_face_shade = scene.y_face_shade;
  s.validate();
  return s;
}

void RunConfig::finalize() {
  plant.validate();
  disturbance.validate();
  (void)camera_model();
  collection.scene = scene_template();
  collection.validate();
  augmentation.validate();
  network.validate();
  training.validate();
  controller.alpha = plant.alpha;
  controller.beta = plant.beta;
  controller.validate();
  trial.validate();
  evaluation.validate();
}

RunConfig default_config() {
  RunConfig c;
  c.finalize();
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::map<std::string, std::map<std::string, Ref>> table;
  for (auto& f : fields(cfg)) table[f.section][f.key] = f.ref;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!table.count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) fail("key '" + key + "' outside any section");
    const auto it = table[section].find(key);
    if (it == table[section].end()) fail("unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(section + "." + key).second) fail("duplicate key '" + key + "' in [" + section + "]");
    if (!std::visit(Assigner{value}, it->second))
      fail("bad value '" + std::string(value) + "' for " + section + "." + key);
  }
  try {
    cfg.finalize();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path), path.string()); }

std::string dump_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields(copy)) {
    if (f.section != section) {
      os << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
      section = f.section;
    }
    os << f.key << " = " << std::visit(Printer{}, f.ref) << '\n';
  }
  return os.str();
}

std::string config_hash(const RunConfig& cfg) { return hash_hex(fnv1a64(dump_config(cfg))); }

}  // namespace dockpilot
