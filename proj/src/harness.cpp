#include "dockpilot/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "dockpilot/plot.hpp"
#include "dockpilot/util.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace dockpilot {

namespace {

void prepare_out(const fs::path& out, const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out.string() + ": " + ec.message());
  write_file(out / "config.toml", dump_config(cfg));
}

void write_json(const fs::path& path, const ojson& j) { write_file(path, j.dump(2) + "\n"); }

ojson stage_header(const std::string& stage, const RunConfig& cfg) {
  ojson j;
  j["stage"] = stage;
  j["config_hash"] = config_hash(cfg);
  return j;
}

ojson column_json(const DatasetStats::Column& c) {
  return {{"mean", c.mean}, {"std", c.std}, {"q1", c.q1}, {"median", c.median}, {"q3", c.q3}};
}

// Manifest whose image refs point at the same files from a different directory.
DatasetManifest rebase(const DatasetManifest& m, const fs::path& new_root) {
  DatasetManifest r = m;
  r.root = new_root;
  for (auto& s : r.samples) {
    const fs::path abs = fs::absolute(m.root / s.image_ref).lexically_normal();
    s.image_ref = abs.lexically_relative(fs::absolute(new_root).lexically_normal()).generic_string();
  }
  return r;
}

}  // namespace

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("least_squares: size mismatch");
  LinearFit f;
  f.n = x.size();
  if (x.empty()) return f;
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  return f;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// -- collect -----------------------------------------------------------------

CollectReport cmd_collect(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare_out(out, cfg);
  fs::create_directories(out / "images");
  fs::create_directories(out / "trajectories");
  const auto& cc = cfg.collection;
  const CameraModel cam = cfg.camera_model();
  const int n = cc.scenes;
  std::vector<SceneRecording> recs(static_cast<std::size_t>(std::max(n, 0)));
  std::vector<std::string> errors(recs.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      recs[i] = collect_scene(seed_mix(cc.seed, static_cast<std::uint64_t>(i)), i, cc, cfg.plant, cfg.disturbance, cam);
      for (std::size_t k = 0; k < recs[i].samples.size(); ++k)
        write_pgm(out / recs[i].samples[k].image_ref, recs[i].images[k]);
      std::ofstream tr(out / "trajectories" / (recs[i].scene_id + ".csv"));
      write_trajectory_csv(tr, recs[i].trajectory);
      if (!tr) throw std::runtime_error("write failed: " + (out / "trajectories" / (recs[i].scene_id + ".csv")).string());
      recs[i].images.clear();
      recs[i].trajectory.clear();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  CollectReport rep;
  rep.manifest.root = out;
  rep.manifest.config_hash = config_hash(cfg);
  ojson scenes = ojson::array();
  for (const auto& r : recs) {
    rep.manifest.samples.insert(rep.manifest.samples.end(), r.samples.begin(), r.samples.end());
    scenes.push_back({{"scene", r.scene_id}, {"samples", r.samples.size()}, {"attempts", r.attempts},
                      {"dock_pose", {r.scene.dock_pose.x(), r.scene.dock_pose.y(), r.scene.dock_pose.theta()}}});
  }
  if (n == 0) {
    rep.warnings.push_back("collection.scenes is 0; manifest is empty");
    log << "warning: " << rep.warnings.back() << "\n";
  }
  if (!rep.manifest.samples.empty()) rep.stats = dataset_stats(rep.manifest);
  write_manifest(out / "manifest.jsonl", rep.manifest);
  write_file(out / "stats.csv", stats_csv(rep.stats));

  ojson j = stage_header("collect", cfg);
  j["samples"] = rep.manifest.samples.size();
  j["manifest_hash"] = hash_hex(fnv1a64(manifest_to_jsonl(rep.manifest)));
  j["distance_m"] = column_json(rep.stats.distance);
  j["speed_mps"] = column_json(rep.stats.speed);
  j["scenes"] = scenes;
  j["warnings"] = rep.warnings;
  write_json(out / "collect.json", j);
  log << "collected " << rep.manifest.samples.size() << " samples from " << n << " scenes into " << out.string()
      << "\n";
  return rep;
}

// -- augment -----------------------------------------------------------------

DatasetManifest cmd_augment(const DatasetManifest& source, const RunConfig& cfg, const fs::path& out,
                            std::ostream& log) {
  prepare_out(out, cfg);
  fs::create_directories(out / "images");
  const auto& ac = cfg.augmentation;
  for (const auto& s : source.samples)
    if (!fs::exists(source.image_path(s))) throw std::runtime_error("missing image " + source.image_path(s).string());

  const std::size_t n = source.samples.size();
  const int copies = ac.copies;
  std::vector<Sample> rows(n * static_cast<std::size_t>(1 + copies));
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      const Sample& src = source.samples[i];
      const GrayImage img = read_pgm(source.image_path(src));
      Sample copy = src;
      copy.image_ref = "images/" + src.id + ".pgm";
      write_pgm(out / copy.image_ref, img);
      rows[i] = copy;
      for (int c = 0; c < copies; ++c) {
        Sample a = augment(src, c);
        write_pgm(out / a.image_ref, augment_image(img, ac, augmentation_draw_seed(src, c)));
        rows[n + static_cast<std::size_t>(c) * n + i] = std::move(a);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  DatasetManifest m;
  m.root = out;
  m.config_hash = config_hash(cfg);
  m.samples = std::move(rows);
  write_manifest(out / "manifest.jsonl", m);
  ojson j = stage_header("augment", cfg);
  j["source_samples"] = n;
  j["copies"] = copies;
  j["samples"] = m.samples.size();
  j["manifest_hash"] = hash_hex(fnv1a64(manifest_to_jsonl(m)));
  write_json(out / "augment.json", j);
  log << "augmented " << n << " samples x" << copies << " into " << out.string() << "\n";
  return m;
}

// -- train -------------------------------------------------------------------

TrainReport cmd_train(const DatasetManifest& manifest, const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  prepare_out(out, cfg);
  const auto& tc = cfg.training;
  if (manifest.samples.size() < static_cast<std::size_t>(tc.batch_size))
    throw std::runtime_error("train: manifest has " + std::to_string(manifest.samples.size()) +
                             " samples, fewer than batch_size " + std::to_string(tc.batch_size));
  TrainReport rep;
  auto [tr, va] = split(manifest, tc.train_fraction, tc.seed);
  if (tr.samples.empty() || va.samples.empty()) throw std::runtime_error("train: split left an empty side");
  rep.train_split = rebase(tr, out);
  rep.val_split = rebase(va, out);
  write_manifest(out / "train_manifest.jsonl", rep.train_split);
  write_manifest(out / "val_manifest.jsonl", rep.val_split);

  rep.result = train(tr, va, cfg.network, tc, [&](const EpochRecord& r) {
    log << "epoch " << r.epoch << " train " << fmt_num(r.train_loss) << " val " << fmt_num(r.val_loss) << "\n"
        << std::flush;
  });
  const auto& res = rep.result;
  save_weights(out / "weights.bin", res.best, res.normalizer, config_hash(cfg));
  write_file(out / "history.csv", history_csv(res.history));

  PlotSpec p;
  p.title = "Training history";
  p.x_label = "epoch";
  p.y_label = "loss (normalized MSE)";
  PlotSeries st{"train", {}, {}, false}, sv{"validation", {}, {}, false};
  for (const auto& r : res.history) {
    st.x.push_back(r.epoch);
    st.y.push_back(r.train_loss);
    sv.x.push_back(r.epoch);
    sv.y.push_back(r.val_loss);
  }
  p.series = {st, sv};
  write_file(out / "loss.svg", render_svg(p));

  ojson j = stage_header("train", cfg);
  j["train_samples"] = tr.samples.size();
  j["val_samples"] = va.samples.size();
  j["epochs"] = res.history.size();
  j["best_epoch"] = res.best_epoch;
  j["best_val_loss"] = res.best_val_loss;
  j["first_val_loss"] = res.history.empty() ? 0.0 : res.history.front().val_loss;
  j["final_train_loss"] = res.history.empty() ? 0.0 : res.history.back().train_loss;
  j["final_val_loss"] = res.history.empty() ? 0.0 : res.history.back().val_loss;
  j["weights_hash"] = hash_hex(fnv1a64(read_file(out / "weights.bin")));
  write_json(out / "train.json", j);
  log << "best epoch " << res.best_epoch << " val " << fmt_num(res.best_val_loss) << "\n";
  return rep;
}

// -- eval --------------------------------------------------------------------

EvalReport evaluate_samples(const DockPoseEstimator& est, const DatasetManifest& manifest) {
  const auto& net = est.network();
  const auto& norm = est.normalizer();
  const TensorSet set = load_tensors(manifest, net.config().input_side, norm);
  const std::vector<float> pred = predict_batch(net, set);
  EvalReport rep;
  std::vector<double> d, v, e, pos, head;
  for (std::size_t i = 0; i < set.count; ++i) {
    const auto& s = manifest.samples[i];
    SampleError se;
    se.id = s.id;
    se.distance = s.meta.distance_to_dock;
    se.speed = s.meta.speed;
    double sq = 0.0;
    for (int c = 0; c < 4; ++c) {
      const double r = double(pred[i * 4 + c]) - double(set.targets[i * 4 + c]);
      sq += r * r;
    }
    se.squared_error = sq / 4.0;
    const RelativePose q = decode_label({pred[i * 4], pred[i * 4 + 1], pred[i * 4 + 2], pred[i * 4 + 3]}, norm);
    se.position_error = std::hypot(q.x() - s.label.x(), q.y() - s.label.y());
    se.heading_error = std::abs(normalize_angle(q.theta() - s.label.theta()));
    d.push_back(se.distance);
    v.push_back(se.speed);
    e.push_back(se.squared_error);
    pos.push_back(se.position_error);
    head.push_back(se.heading_error);
    rep.samples.push_back(std::move(se));
  }
  rep.vs_distance = least_squares(d, e);
  rep.vs_speed = least_squares(v, e);
  rep.mean_squared_error = e.empty() ? 0.0 : std::accumulate(e.begin(), e.end(), 0.0) / double(e.size());
  rep.median_position_error = median(pos);
  rep.median_heading_error = median(head);
  return rep;
}

EvalReport cmd_eval(const DatasetManifest& manifest, const fs::path& weights, const RunConfig& cfg, const fs::path& out,
                    std::ostream& log) {
  prepare_out(out, cfg);
  WeightFile wf = load_weights(weights);
  const DockPoseEstimator est(std::move(wf.net), wf.normalizer);
  EvalReport rep = evaluate_samples(est, manifest);

  std::ostringstream csv;
  csv << "id,dist_m,speed_mps,squared_error,position_error_m,heading_error_rad\n";
  for (const auto& s : rep.samples)
    csv << s.id << ',' << fmt_exact(s.distance) << ',' << fmt_exact(s.speed) << ',' << fmt_exact(s.squared_error) << ','
        << fmt_exact(s.position_error) << ',' << fmt_exact(s.heading_error) << '\n';
  write_file(out / "errors.csv", csv.str());
  std::ostringstream fits;
  fits << "regressor,slope,intercept,n\n";
  fits << "dist_m," << fmt_exact(rep.vs_distance.slope) << ',' << fmt_exact(rep.vs_distance.intercept) << ','
       << rep.vs_distance.n << '\n';
  fits << "speed_mps," << fmt_exact(rep.vs_speed.slope) << ',' << fmt_exact(rep.vs_speed.intercept) << ','
       << rep.vs_speed.n << '\n';
  write_file(out / "fits.csv", fits.str());

  auto scatter = [&](const char* file, const char* xl, const LinearFit& f, auto get) {
    PlotSpec p;
    p.title = std::string("Error vs ") + xl;
    p.x_label = xl;
    p.y_label = "squared error (normalized)";
    PlotSeries pts{"samples", {}, {}, true};
    for (const auto& s : rep.samples) {
      pts.x.push_back(get(s));
      pts.y.push_back(s.squared_error);
    }
    PlotSeries line{"least squares", {}, {}, false};
    if (!pts.x.empty()) {
      const auto [lo, hi] = std::minmax_element(pts.x.begin(), pts.x.end());
      line.x = {*lo, *hi};
      line.y = {f.slope * *lo + f.intercept, f.slope * *hi + f.intercept};
    }
    p.series = {pts, line};
    write_file(out / file, render_svg(p));
  };
  scatter("error_vs_distance.svg", "distance to dock (m)", rep.vs_distance,
          [](const SampleError& s) { return s.distance; });
  scatter("error_vs_speed.svg", "speed (m/s)", rep.vs_speed, [](const SampleError& s) { return s.speed; });

  ojson j = stage_header("eval", cfg);
  j["weights_config_hash"] = wf.config_hash;
  j["samples"] = rep.samples.size();
  j["mean_squared_error"] = rep.mean_squared_error;
  j["median_position_error_m"] = rep.median_position_error;
  j["median_heading_error_rad"] = rep.median_heading_error;
  j["distance_fit"] = {{"slope", rep.vs_distance.slope}, {"intercept", rep.vs_distance.intercept}};
  j["speed_fit"] = {{"slope", rep.vs_speed.slope}, {"intercept", rep.vs_speed.intercept}};
  write_json(out / "eval.json", j);
  log << "eval: " << rep.samples.size() << " samples, mse " << fmt_num(rep.mean_squared_error) << ", distance slope "
      << fmt_num(rep.vs_distance.slope) << ", speed slope " << fmt_num(rep.vs_speed.slope) << "\n";
  return rep;
}

// -- data efficiency ---------------------------------------------------------

std::vector<std::vector<std::size_t>> nested_subsets(const DatasetManifest& manifest, const std::vector<int>& sizes,
                                                     std::uint64_t seed) {
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    const auto [it, inserted] = group_of.try_emplace(source_id(manifest.samples[i]), groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> out;
  for (int size : sizes) {
    if (size <= 0) throw std::invalid_argument("data-eff: sizes must be positive");
    if (static_cast<std::size_t>(size) > manifest.samples.size())
      throw std::runtime_error("data-eff: size " + std::to_string(size) + " exceeds the " +
                               std::to_string(manifest.samples.size()) + " available samples");
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < order.size() && members.size() < static_cast<std::size_t>(size); ++k)
      for (std::size_t idx : groups[order[k]]) members.push_back(idx);
    members.resize(std::min(members.size(), static_cast<std::size_t>(size)));
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  return out;
}

DataEffReport cmd_data_eff(const DatasetManifest& manifest, const RunConfig& cfg, const fs::path& out,
                           std::ostream& log) {
  prepare_out(out, cfg);
  const auto& ec = cfg.evaluation;
  const auto subsets = nested_subsets(manifest, ec.data_eff_sizes, ec.data_eff_seed);
  TrainConfig tc = cfg.training;
  tc.epochs = ec.data_eff_epochs;
  DataEffReport rep;
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    DatasetManifest sub;
    sub.root = manifest.root;
    sub.config_hash = manifest.config_hash;
    for (std::size_t idx : subsets[k]) sub.samples.push_back(manifest.samples[idx]);
    auto [tr, va] = split(sub, tc.train_fraction, seed_mix(ec.data_eff_seed, k));
    if (tr.samples.size() < static_cast<std::size_t>(tc.batch_size) || va.samples.empty())
      throw std::runtime_error("data-eff: size " + std::to_string(ec.data_eff_sizes[k]) + " is too small to split");
    const TrainResult res = train(tr, va, cfg.network, tc);
    DataEffRow row;
    row.size = ec.data_eff_sizes[k];
    row.train_samples = tr.samples.size();
    row.val_samples = va.samples.size();
    row.final_train_loss = res.history.back().train_loss;
    row.final_val_loss = res.history.back().val_loss;
    row.best_val_loss = res.best_val_loss;
    for (const auto& s : sub.samples) row.ids.push_back(s.id);
    log << "data-eff size " << row.size << ": train " << fmt_num(row.final_train_loss) << " val "
        << fmt_num(row.final_val_loss) << "\n"
        << std::flush;
    rep.rows.push_back(std::move(row));
  }

  std::ostringstream csv;
  csv << "size,train_samples,val_samples,final_train_loss,final_val_loss,best_val_loss\n";
  for (const auto& r : rep.rows)
    csv << r.size << ',' << r.train_samples << ',' << r.val_samples << ',' << fmt_exact(r.final_train_loss) << ','
        << fmt_exact(r.final_val_loss) << ',' << fmt_exact(r.best_val_loss) << '\n';
  write_file(out / "data_efficiency.csv", csv.str());

  PlotSpec p;
  p.title = "Data efficiency";
  p.x_label = "dataset size";
  p.y_label = "final loss (normalized MSE)";
  PlotSeries st{"train", {}, {}, false}, sv{"validation", {}, {}, false};
  for (const auto& r : rep.rows) {
    st.x.push_back(r.size);
    st.y.push_back(r.final_train_loss);
    sv.x.push_back(r.size);
    sv.y.push_back(r.final_val_loss);
  }
  p.series = {st, sv};
  write_file(out / "data_efficiency.svg", render_svg(p));

  ojson j = stage_header("data-eff", cfg);
  j["epochs"] = tc.epochs;
  ojson rows = ojson::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"size", r.size},
                    {"train_samples", r.train_samples},
                    {"val_samples", r.val_samples},
                    {"final_train_loss", r.final_train_loss},
                    {"final_val_loss", r.final_val_loss},
                    {"best_val_loss", r.best_val_loss}});
  j["rows"] = rows;
  write_json(out / "data_eff.json", j);
  return rep;
}

// -- dock --------------------------------------------------------------------

DockReport cmd_dock(const RunConfig& cfg, const std::optional<fs::path>& weights, int trials, const fs::path& out,
                    std::ostream& log) {
  if (trials < 0) throw std::invalid_argument("dock: trial count must be >= 0");
  prepare_out(out, cfg);
  const auto& ec = cfg.evaluation;
  std::unique_ptr<DockPoseSource> source;
  DockReport rep;
  std::string weights_hash;
  if (ec.oracle || !weights) {
    if (!ec.oracle) log << "warning: no weights given, docking with oracle poses\n";
    source = std::make_unique<OraclePoseSource>();
    rep.oracle = true;
  } else {
    WeightFile wf = load_weights(*weights);
    weights_hash = wf.config_hash;
    source = std::make_unique<NetworkPoseSource>(DockPoseEstimator(std::move(wf.net), wf.normalizer));
  }
  const FisheyeRenderer renderer(cfg.camera_model());
  const DockScene scene = cfg.scene_template();
  const DisturbanceConfig dist = ec.trial_disturbance ? cfg.disturbance : DisturbanceConfig::none();
  fs::create_directories(out / "trials");

  for (ServoMode mode : {ServoMode::continuous, ServoMode::single_shot}) {
    DockModeSummary ms;
    ms.mode = mode;
    ms.trials.resize(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < trials; ++i) {
      const std::uint64_t seed = ec.trial_seed + static_cast<std::uint64_t>(i);
      try {
        ms.trials[i] = docking_trial(cfg.plant, scene, *source, mode, cfg.controller, cfg.trial, dist, renderer, seed);
      } catch (const std::exception& e) {
        TrialResult r;
        r.seed = seed;
        r.mode = mode;
        r.outcome = TrialOutcome::aborted;
        r.message = e.what();
        ms.trials[i] = std::move(r);
      }
    }
    std::vector<double> paired;
    for (std::size_t i = 0; i < ms.trials.size(); ++i) {
      const auto& r = ms.trials[i];
      if (r.success()) ++ms.successes;
      if (i < static_cast<std::size_t>(ec.paired_trials)) paired.push_back(r.final_position_error);
      const std::string stem = std::string(to_string(mode)) + "_" + std::to_string(r.seed);
      std::ofstream csv(out / "trials" / (stem + ".csv"));
      write_trial_csv(csv, r);
      write_file(out / "trials" / (stem + ".json"), trial_summary_json(r));
    }
    ms.median_final_error = median(paired);
    log << to_string(mode) << ": " << ms.successes << "/" << trials << " docked, median final error "
        << fmt_num(ms.median_final_error) << " m\n";
    rep.modes.push_back(std::move(ms));
  }

  std::ostringstream csv;
  csv << "mode,seed,outcome,success,final_position_error_m,final_heading_error_rad,sim_time_s,predictions\n";
  for (const auto& ms : rep.modes)
    for (const auto& r : ms.trials)
      csv << to_string(ms.mode) << ',' << r.seed << ',' << to_string(r.outcome) << ',' << (r.success() ? 1 : 0) << ','
          << fmt_exact(r.final_position_error) << ',' << fmt_exact(r.final_heading_error) << ','
          << fmt_exact(r.sim_time) << ',' << r.predictions << '\n';
  write_file(out / "trials.csv", csv.str());

  // top-down view of the continuous-mode runs over the block footprints
  PlotSpec p;
  p.title = "Docking trajectories (dock frame)";
  p.x_label = "x (m)";
  p.y_label = "y (m)";
  p.equal_aspect = true;
  for (const auto& b : scene.blocks) p.boxes.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
  if (!rep.modes.empty())
    for (const auto& r : rep.modes.front().trials) {
      PlotSeries s{"seed " + std::to_string(r.seed) + (r.success() ? "" : " (failed)"), {}, {}, false};
      for (const auto& st : r.trajectory) {
        s.x.push_back(st.pose.x());
        s.y.push_back(st.pose.y());
      }
      if (!s.x.empty()) p.series.push_back(std::move(s));
    }
  write_file(out / "trajectories.svg", render_svg(p));

  ojson j = stage_header("dock", cfg);
  j["pose_source"] = rep.oracle ? "oracle" : "network";
  if (!rep.oracle) j["weights_config_hash"] = weights_hash;
  j["trials"] = trials;
  j["disturbance"] = ec.trial_disturbance;
  j["paired_trials"] = std::min(trials, ec.paired_trials);
  ojson modes = ojson::array();
  for (const auto& ms : rep.modes) {
    std::map<std::string, int> outcomes;
    for (const auto& r : ms.trials) ++outcomes[to_string(r.outcome)];
    modes.push_back({{"mode", to_string(ms.mode)},
                     {"successes", ms.successes},
                     {"outcomes", outcomes},
                     {"median_final_position_error_m", ms.median_final_error}});
  }
  j["modes"] = modes;
  write_json(out / "dock.json", j);
  return rep;
}

// -- report ------------------------------------------------------------------

std::string cmd_report(const fs::path& out, std::ostream& log) {
  static const std::vector<std::string> kStages{"collect", "augment", "train", "eval", "data_eff", "dock"};
  if (!fs::exists(out)) fs::create_directories(out);
  std::vector<fs::path> found;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    const std::string stem = e.path().stem().string();
    if (std::find(kStages.begin(), kStages.end(), stem) != kStages.end()) found.push_back(e.path());
  }
  std::sort(found.begin(), found.end());

  std::ostringstream txt;
  ojson j;
  j["stage"] = "report";
  ojson runs = ojson::array();
  std::set<std::string> seen;
  txt << "dockpilot report\n";
  if (found.empty()) txt << "\nno runs found\n";
  for (const auto& path : found) {
    const std::string rel = path.lexically_relative(out).generic_string();
    ojson s;
    try {
      s = ojson::parse(read_file(path));
    } catch (const std::exception& e) {
      txt << "\n[" << rel << "] unreadable: " << e.what() << "\n";
      continue;
    }
    const std::string stage = s.value("stage", path.stem().string());
    seen.insert(path.stem().string());
    txt << "\n[" << stage << "] " << rel << "\n";
    for (const auto& [k, v] : s.items()) {
      if (k == "stage" || k == "scenes" || k == "rows" || k == "modes") continue;
      txt << "  " << k << " = " << v.dump() << "\n";
    }
    if (s.contains("rows"))
      for (const auto& r : s["rows"]) txt << "  row " << r.dump() << "\n";
    if (s.contains("modes"))
      for (const auto& m : s["modes"]) txt << "  mode " << m.dump() << "\n";
    std::vector<std::string> tables;
    for (const auto& e : fs::directory_iterator(path.parent_path())) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".csv" || ext == ".svg")) tables.push_back(e.path().filename().string());
    }
    std::sort(tables.begin(), tables.end());
    for (const auto& t : tables) txt << "  file " << t << "\n";
    runs.push_back({{"path", rel}, {"summary", s}, {"files", tables}});
  }
  std::vector<std::string> missing;
  for (const auto& st : kStages)
    if (!seen.count(st)) missing.push_back(st);
  if (!found.empty() && !missing.empty()) {
    txt << "\nmissing stages:";
    for (const auto& m : missing) txt << " " << m;
    txt << "\n";
  }
  j["runs"] = runs;
  j["missing"] = missing;
  write_file(out / "report.txt", txt.str());
  write_json(out / "report.json", j);
  log << "report: " << found.size() << " stage summaries\n";
  return txt.str();
}

}  // namespace dockpilot
