// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "dockpilot/harness.hpp"
#include "dockpilot/util.hpp"
#include "json.hpp"
#include "oracles.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace dockpilot;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::ostringstream quiet;  // stage logs go here unless --verbose

struct Shared {
  fs::path work;
  std::ostream* log = &quiet;
  std::optional<DatasetManifest> base;       // 2000 samples, no augmentation
  std::optional<TrainReport> plain;
  std::optional<TrainReport> augmented;
  fs::path plain_weights, augmented_weights;
  double plain_seconds = 0, augmented_seconds = 0;
};

RunConfig base_config() { return default_config(); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// -- 1 ---------------------------------------------------------------------

Verdict geometry(Shared&) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(-50, 50), ang(-10, 10);
  auto draw = [&] { return Pose2(pos(rng), pos(rng), ang(rng)); };
  const double tol = 1e-10;
  double worst = 0;
  auto track = [&](const Pose2& a, const Pose2& b) { worst = std::max(worst, pose_distance_inf(a, b)); };
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Pose2 a = draw(), b = draw(), c = draw();
    track(compose(a, inverse(a)), Pose2::identity());
    track(compose(inverse(a), a), Pose2::identity());
    track(inverse(inverse(a)), a);
    track(compose(compose(a, b), c), compose(a, compose(b, c)));
    track(apply_relative(a, relative_pose(a, b)), b);
    track(relative_pose(a, apply_relative(a, c)), c);
  }
  const double t = seconds_since(t0);
  return {worst <= tol && t < 5.0,
          "max deviation " + fmt(worst) + " over " + std::to_string(n) + " pose triples, " + fmt(t) + " s"};
}

// -- 2 ---------------------------------------------------------------------

Verdict allocation(Shared&) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> gain(0.05, 5), twist(-3, 3);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    UsvParams p;
    p.alpha = gain(rng), p.beta = gain(rng);
    const double v = twist(rng), w = twist(rng);
    const Thrusts th = inverse_kinematics(v, w, p.alpha, p.beta);
    const Twist back = forward_model(p, th.right, th.left);
    worst = std::max({worst, std::abs(back.v - v), std::abs(back.omega - w)});
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-12 && t < 1.0, "max |error| " + fmt(worst) + ", " + fmt(t) + " s"};
}

// -- 3 ---------------------------------------------------------------------

Verdict gradient(Shared&) {
  const auto t0 = Clock::now();
  NetworkConfig c;
  c.input_side = 8;
  c.conv_filters = {2};
  c.fc_hidden = {6, 5};
  double worst = 0;
  std::size_t params = 0;
  for (std::uint64_t b = 0; b < 10; ++b) {
    Network<double> net(c);
    net.initialize(1000 + b);
    std::mt19937_64 rng(2000 + b);
    std::uniform_real_distribution<double> u(0, 1), bias(-0.1, 0.1);
    for (const auto& t : net.tensors())
      if (t.name.ends_with("bias"))
        for (std::size_t k = 0; k < t.size; ++k) net.params()[t.offset + k] = bias(rng);
    const std::size_t batch = 4;
    std::vector<double> img(batch * 64), tgt(batch * 4);
    for (auto& x : img) x = u(rng);
    for (auto& x : tgt) x = 2 * u(rng) - 1;
    const auto g = oracle::finite_difference(net, img, tgt, batch, true, 77 + b);
    worst = std::max(worst, g.max_rel_error);
    params = g.params;
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-3 && t < 60.0, "max relative error " + fmt(worst) + " over " + std::to_string(params) +
                                         " parameters x 10 batches, " + fmt(t) + " s"};
}

// -- 4 ---------------------------------------------------------------------

Verdict labels(Shared& sh) {
  const auto t0 = Clock::now();
  RunConfig cfg = base_config();
  cfg.collection.scenes = 5;
  cfg.collection.samples_per_scene = 100;
  cfg.collection.drift.enabled = false;
  cfg.finalize();
  const fs::path out = sh.work / "c4_collect";
  const auto rep = cmd_collect(cfg, out, *sh.log);
  const json summary = json::parse(read_file(out / "collect.json"));
  std::map<std::string, Pose2> docks;
  for (const auto& s : summary["scenes"]) {
    const auto d = s["dock_pose"];
    docks[s["scene"].get<std::string>()] = Pose2(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
  }
  const DatasetManifest m = read_manifest(out / "manifest.jsonl");
  std::size_t good = 0;
  double worst = 0;
  for (const auto& s : m.samples) {
    const double err = pose_distance_inf(s.label, relative_pose(s.meta.world_pose, docks.at(s.meta.scene_id)));
    worst = std::max(worst, err);
    good += err <= 1e-9;
  }
  const double t = seconds_since(t0);
  return {m.samples.size() == 500 && good == m.samples.size() && t < 120.0,
          std::to_string(good) + "/" + std::to_string(m.samples.size()) + " labels within 1e-9 (max " + fmt(worst) +
              "), " + fmt(t) + " s"};
}

// -- 5 ---------------------------------------------------------------------

const DatasetManifest& base_dataset(Shared& sh) {
  if (!sh.base) {
    RunConfig cfg = base_config();
    sh.base = cmd_collect(cfg, sh.work / "collect", *sh.log).manifest;
  }
  return *sh.base;
}

void run_training(Shared& sh) {
  if (sh.plain) return;
  const RunConfig cfg = base_config();
  const DatasetManifest& m = base_dataset(sh);
  auto t0 = Clock::now();
  sh.plain = cmd_train(m, cfg, sh.work / "train_plain", *sh.log);
  sh.plain_seconds = seconds_since(t0);
  sh.plain_weights = sh.work / "train_plain" / "weights.bin";
  const DatasetManifest aug = cmd_augment(m, cfg, sh.work / "augment", *sh.log);
  t0 = Clock::now();
  sh.augmented = cmd_train(aug, cfg, sh.work / "train_aug", *sh.log);
  sh.augmented_seconds = seconds_since(t0);
  sh.augmented_weights = sh.work / "train_aug" / "weights.bin";
}

Verdict training(Shared& sh) {
  run_training(sh);
  const auto& h = sh.plain->result.history;
  const auto& ha = sh.augmented->result.history;
  const double final_val = h.back().val_loss, first_val = h.front().val_loss;
  const double plain_train = h.back().train_loss, aug_train = ha.back().train_loss;
  const bool runtime_ok = sh.plain_seconds <= 1200 && sh.augmented_seconds <= 1200;
  const bool pass = base_dataset(sh).samples.size() == 2000 && h.size() == 30 && final_val <= 0.05 &&
                    final_val < first_val && aug_train <= plain_train && runtime_ok;
  return {pass, "final val " + fmt(final_val) + " (epoch 1 " + fmt(first_val) + "), train loss augmented " +
                    fmt(aug_train) + " vs plain " + fmt(plain_train) + ", " + fmt(sh.plain_seconds) + " s + " +
                    fmt(sh.augmented_seconds) + " s"};
}

// -- 6 ---------------------------------------------------------------------

Verdict robustness(Shared& sh) {
  run_training(sh);
  const auto t0 = Clock::now();
  const RunConfig cfg = base_config();
  const EvalReport rep = cmd_eval(sh.plain->val_split, sh.plain_weights, cfg, sh.work / "eval", *sh.log);
  const double t = seconds_since(t0);
  const double sd = rep.vs_distance.slope, sv = rep.vs_speed.slope;
  return {std::abs(sd) <= 0.02 && std::abs(sv) <= 0.05 && t < 120.0,
          "slope vs distance " + fmt(sd) + " /m, vs speed " + fmt(sv) + " /(m/s), median position error " +
              fmt(rep.median_position_error) + " m over " + std::to_string(rep.samples.size()) + " samples, " +
              fmt(t) + " s"};
}

// -- 7 ---------------------------------------------------------------------

Verdict data_efficiency(Shared& sh) {
  const auto t0 = Clock::now();
  const RunConfig cfg = base_config();
  const DataEffReport rep = cmd_data_eff(base_dataset(sh), cfg, sh.work / "data_eff", *sh.log);
  const double t = seconds_since(t0);
  std::string seq;
  bool band = true;
  double running_min = 1e300;
  for (const auto& r : rep.rows) {
    const double v = r.final_val_loss;
    if (v > 1.1 * running_min) band = false;
    running_min = std::min(running_min, v);
    seq += (seq.empty() ? "" : ", ") + std::to_string(r.size) + ":" + fmt(v);
  }
  const bool ends_ok = rep.rows.size() == 5 && rep.rows.back().final_val_loss <= rep.rows.front().final_val_loss;
  return {ends_ok && band && t <= 2700, "val loss by size {" + seq + "}, " + fmt(t) + " s"};
}

// -- 8 ---------------------------------------------------------------------

Verdict oracle_docking(Shared& sh) {
  const auto t0 = Clock::now();
  RunConfig cfg = base_config();
  cfg.evaluation.oracle = true;
  cfg.evaluation.trial_disturbance = false;
  const DockReport calm = cmd_dock(cfg, std::nullopt, 20, sh.work / "dock_oracle_calm", *sh.log);
  cfg.evaluation.trial_disturbance = true;
  const DockReport windy = cmd_dock(cfg, std::nullopt, 20, sh.work / "dock_oracle_windy", *sh.log);
  const double t = seconds_since(t0);
  double longest = 0;
  for (const auto* r : {&calm, &windy})
    for (const auto& tr : r->modes[0].trials) longest = std::max(longest, tr.sim_time);
  const std::size_t a = calm.modes[0].successes, b = windy.modes[0].successes;
  return {a == 20 && b >= 18 && longest <= 120.0 && t < 300.0,
          std::to_string(a) + "/20 calm, " + std::to_string(b) + "/20 with disturbance, longest trial " + fmt(longest) +
              " s simulated, " + fmt(t) + " s wall"};
}

// -- 9 ---------------------------------------------------------------------

Verdict network_docking(Shared& sh) {
  run_training(sh);
  const auto t0 = Clock::now();
  RunConfig cfg = base_config();
  cfg.evaluation.oracle = false;
  cfg.evaluation.trial_disturbance = true;
  const DockReport rep = cmd_dock(cfg, sh.augmented_weights, 20, sh.work / "dock_network", *sh.log);
  const double t = seconds_since(t0);
  const auto& cont = rep.modes[0];
  const auto& single = rep.modes[1];
  return {!rep.oracle && cont.successes >= 18 && cont.median_final_error <= single.median_final_error && t < 900.0,
          std::to_string(cont.successes) + "/20 continuous (single-shot " + std::to_string(single.successes) +
              "/20), median final error continuous " + fmt(cont.median_final_error) + " m vs single-shot " +
              fmt(single.median_final_error) + " m, " + fmt(t) + " s"};
}

// -- 10 --------------------------------------------------------------------

Verdict inference(Shared&) {
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
#endif
  const RunConfig cfg = base_config();
  Network<float> net(cfg.network);
  net.initialize(3);
  const DockPoseEstimator est(net, LabelNormalizer{});
  const FisheyeRenderer renderer(cfg.camera_model());
  const GrayImage frame =
      crop_resize(renderer.render(cfg.scene_template(), Pose2(-4, 0.3, 0.1)).image, cfg.collection.image_side);
  est.predict(frame);
  const int n = 60;
  const auto t0 = Clock::now();
  for (int i = 0; i < n; ++i) est.predict(frame);
  const double hz = n / seconds_since(t0);
#ifdef _OPENMP
  omp_set_num_threads(saved);
#endif
  return {hz >= 6.0, fmt(hz) + " predictions/s on one thread, " + std::to_string(frame.width) + " px frame to " +
                         std::to_string(cfg.network.input_side) + " px input"};
}

// -- 11 --------------------------------------------------------------------

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  return files;
}

Verdict determinism(Shared& sh) {
  const auto t0 = Clock::now();
  RunConfig cfg = base_config();
  cfg.collection.scenes = 3;
  cfg.collection.samples_per_scene = 60;
  cfg.training.epochs = 3;
  cfg.evaluation.data_eff_sizes = {60, 120};
  cfg.evaluation.data_eff_epochs = 2;
  cfg.evaluation.oracle = true;
  cfg.finalize();
  auto run = [&](const fs::path& root) {
    const auto col = cmd_collect(cfg, root / "collect", *sh.log);
    const auto aug = cmd_augment(col.manifest, cfg, root / "augment", *sh.log);
    const auto tr = cmd_train(aug, cfg, root / "train", *sh.log);
    cmd_eval(tr.val_split, root / "train" / "weights.bin", cfg, root / "eval", *sh.log);
    cmd_data_eff(col.manifest, cfg, root / "data_eff", *sh.log);
    cmd_dock(cfg, std::nullopt, 4, root / "dock", *sh.log);
    cmd_report(root, *sh.log);
  };
  const fs::path a = sh.work / "c11_a", b = sh.work / "c11_b";
  fs::remove_all(a);
  fs::remove_all(b);
  run(a);
  run(b);
  const auto ta = tree(a), tb = tree(b);
  std::size_t same = 0;
  std::string first_diff;
  for (const auto& [name, bytes] : ta) {
    const auto it = tb.find(name);
    if (it != tb.end() && it->second == bytes)
      ++same;
    else if (first_diff.empty())
      first_diff = name;
  }
  const bool pass = ta.size() == tb.size() && same == ta.size() && ta.count("train/weights.bin") &&
                    ta.count("augment/manifest.jsonl") && ta.count("report.json");
  return {pass, std::to_string(same) + "/" + std::to_string(ta.size()) + " files byte-identical across reruns" +
                    (first_diff.empty() ? "" : " (first difference: " + first_diff + ")") + ", " +
                    fmt(seconds_since(t0)) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dockpilot acceptance checks"};
  fs::path work = fs::temp_directory_path() / "dockpilot_acceptance";
  std::vector<int> only;
  bool verbose = false;
  app.add_option("--work", work, "scratch directory for stage outputs");
  app.add_option("--only", only, "run just these criteria");
  app.add_flag("--verbose", verbose, "echo stage logs");
  CLI11_PARSE(app, argc, argv);

  configure_threads();
  Shared sh;
  sh.work = work;
  if (verbose) sh.log = &std::cerr;
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Verdict(Shared&)>>> criteria{
      {"geometry round trips and associativity", geometry},
      {"allocation round trip", allocation},
      {"gradient check", gradient},
      {"auto-labeling correctness", labels},
      {"desk-scale training", training},
      {"distance and speed robustness", robustness},
      {"data efficiency trend", data_efficiency},
      {"oracle docking", oracle_docking},
      {"network docking, continuous vs single-shot", network_docking},
      {"inference budget", inference},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    try {
      v = criteria[i].second(sh);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << ": " << criteria[i].first << " - "
              << v.detail << std::endl;
  }
  return failed ? 1 : 0;
}
