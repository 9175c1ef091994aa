#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dockpilot/harness.hpp"
#include "dockpilot/util.hpp"
#include "oracles.hpp"

using namespace dockpilot;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_run() {
  RunConfig c = default_config();
  c.collection.scenes = 2;
  c.collection.samples_per_scene = 12;
  c.collection.image_side = 64;
  c.augmentation.copies = 1;
  c.network.input_side = 16;
  c.network.conv_filters = {4};
  c.network.fc_hidden = {8};
  c.training.epochs = 2;
  c.training.batch_size = 4;
  c.evaluation.data_eff_sizes = {8, 16};
  c.evaluation.data_eff_epochs = 1;
  c.evaluation.trials = 2;
  c.evaluation.paired_trials = 2;
  c.evaluation.oracle = true;
  c.finalize();
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dockpilot_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  return files;
}

void pipeline(const RunConfig& cfg, const fs::path& root) {
  std::ostringstream log;
  const auto col = cmd_collect(cfg, root / "collect", log);
  const auto aug = cmd_augment(col.manifest, cfg, root / "augment", log);
  cmd_train(aug, cfg, root / "train", log);
  const auto val = read_manifest(root / "train" / "val_manifest.jsonl");
  cmd_eval(val, root / "train" / "weights.bin", cfg, root / "eval", log);
  cmd_data_eff(col.manifest, cfg, root / "data_eff", log);
  cmd_dock(cfg, std::nullopt, cfg.evaluation.trials, root / "dock", log);
  cmd_report(root, log);
}

}  // namespace

TEST_CASE("least squares oracles") {
  std::vector<double> x, flat, lin, noisy;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 0.05);
  for (int i = 0; i < 50; ++i) {
    x.push_back(0.2 * i);
    flat.push_back(0.37);
    lin.push_back(0.1 * x.back() + 2);
    noisy.push_back(-0.3 * x.back() + 1 + n(rng));
  }
  CHECK(std::abs(least_squares(x, flat).slope) < 1e-12);
  CHECK(std::abs(least_squares(x, flat).intercept - 0.37) < 1e-12);
  CHECK(std::abs(least_squares(x, lin).slope - 0.1) < 1e-6);
  CHECK(std::abs(least_squares(x, lin).intercept - 2) < 1e-6);
  const auto [s, b] = oracle::ols(x, noisy);
  CHECK(std::abs(least_squares(x, noisy).slope - s) < 1e-10);
  CHECK(std::abs(least_squares(x, noisy).intercept - b) < 1e-10);
  CHECK(least_squares(std::vector<double>(50, 1.0), lin).slope == 0.0);
  CHECK(least_squares({}, {}).n == 0);
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("nested subsets") {
  DatasetManifest m;
  for (int i = 0; i < 30; ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    m.samples.push_back(s);
  }
  for (int i = 0; i < 30; ++i) m.samples.push_back(augment(m.samples[i], 0));
  const auto subs = nested_subsets(m, {5, 10, 20}, 3);
  REQUIRE(subs.size() == 3);
  for (std::size_t k = 0; k < subs.size(); ++k) {
    CHECK(std::is_sorted(subs[k].begin(), subs[k].end()));
    CHECK(subs[k].size() == std::vector<std::size_t>{5, 10, 20}[k]);
    CHECK(std::set<std::size_t>(subs[k].begin(), subs[k].end()).size() == subs[k].size());
    if (k > 0) CHECK(std::includes(subs[k].begin(), subs[k].end(), subs[k - 1].begin(), subs[k - 1].end()));
  }
  CHECK(nested_subsets(m, {5, 10, 20}, 3) == subs);
  CHECK(nested_subsets(m, {5, 10, 20}, 4) != subs);
}

TEST_CASE("empty report and zero-trial dock") {
  const fs::path d = fresh_dir("empty");
  std::ostringstream log;
  CHECK(cmd_report(d, log).find("no runs found") != std::string::npos);
  RunConfig cfg = tiny_run();
  const auto rep = cmd_dock(cfg, std::nullopt, 0, d / "dock", log);
  for (const auto& m : rep.modes) CHECK(m.trials.empty());
  CHECK(fs::exists(d / "dock" / "dock.json"));
  fs::remove_all(d);
}

TEST_CASE("zero-scene collection warns and writes an empty manifest") {
  const fs::path d = fresh_dir("zero");
  RunConfig cfg = tiny_run();
  cfg.collection.scenes = 0;
  std::ostringstream log;
  const auto rep = cmd_collect(cfg, d, log);
  CHECK(rep.manifest.samples.empty());
  CHECK(!rep.warnings.empty());
  CHECK(read_manifest(d / "manifest.jsonl").samples.empty());
  fs::remove_all(d);
}

TEST_CASE("missing inputs are hard errors") {
  const fs::path d = fresh_dir("missing");
  RunConfig cfg = tiny_run();
  std::ostringstream log;
  DatasetManifest m;
  m.root = d;
  Sample s;
  s.id = "ghost";
  s.image_ref = "images/ghost.pgm";
  m.samples.push_back(s);
  CHECK_THROWS(cmd_augment(m, cfg, d / "aug", log));
  CHECK_THROWS(cmd_train(m, cfg, d / "train", log));
  CHECK_THROWS(cmd_eval(m, d / "nope.bin", cfg, d / "eval", log));
  fs::remove_all(d);
}

TEST_CASE("tiny pipeline is byte-identical on rerun") {
  const RunConfig cfg = tiny_run();
  const fs::path a = fresh_dir("pipe_a"), b = fresh_dir("pipe_b");
  pipeline(cfg, a);
  pipeline(cfg, b);
  const auto ta = tree(a), tb = tree(b);
  CHECK(ta.size() == tb.size());
  for (const auto& [name, bytes] : ta) {
    CAPTURE(name);
    REQUIRE(tb.count(name) == 1);
    CHECK(tb.at(name) == bytes);
  }
  for (const char* f : {"collect/manifest.jsonl", "augment/manifest.jsonl", "train/weights.bin", "eval/errors.csv",
                        "data_eff/data_efficiency.csv", "dock/trials.csv", "report.txt", "report.json"})
    CHECK(ta.count(f) == 1);
  CHECK(read_file(a / "report.txt").find("no runs found") == std::string::npos);
  CHECK(read_manifest(a / "augment" / "manifest.jsonl").samples.size() == 48);
  fs::remove_all(a);
  fs::remove_all(b);
}
