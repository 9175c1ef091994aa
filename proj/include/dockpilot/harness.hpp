#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dockpilot/config.hpp"
#include "dockpilot/data.hpp"
#include "dockpilot/net.hpp"
#include "dockpilot/trial.hpp"

namespace dockpilot {

// Every command writes <stage>.json and the effective config.toml into its
// output directory. Logs and warnings go to `log`, never into the outputs.

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = slope * x + intercept. Degenerate x gives slope 0.
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

struct CollectReport {
  DatasetManifest manifest;
  DatasetStats stats;
  std::vector<std::string> warnings;
};

CollectReport cmd_collect(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Source rows (images copied) followed by `copies` augmented rows per source.
DatasetManifest cmd_augment(const DatasetManifest& source, const RunConfig& cfg, const std::filesystem::path& out,
                            std::ostream& log);

struct TrainReport {
  TrainResult result;
  DatasetManifest train_split;
  DatasetManifest val_split;
};

/// Split, train, and write weights.bin, history.csv, loss.svg and the split manifests.
TrainReport cmd_train(const DatasetManifest& manifest, const RunConfig& cfg, const std::filesystem::path& out,
                      std::ostream& log);

struct SampleError {
  std::string id;
  double distance = 0.0;
  double speed = 0.0;
  double squared_error = 0.0;  // mean over the four normalized output channels
  double position_error = 0.0;  // m
  double heading_error = 0.0;   // rad, absolute
};

struct EvalReport {
  std::vector<SampleError> samples;
  LinearFit vs_distance;
  LinearFit vs_speed;
  double mean_squared_error = 0.0;
  double median_position_error = 0.0;
  double median_heading_error = 0.0;
};

EvalReport evaluate_samples(const DockPoseEstimator& estimator, const DatasetManifest& manifest);
EvalReport cmd_eval(const DatasetManifest& manifest, const std::filesystem::path& weights, const RunConfig& cfg,
                    const std::filesystem::path& out, std::ostream& log);

struct DataEffRow {
  int size = 0;
  std::size_t train_samples = 0;
  std::size_t val_samples = 0;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  double best_val_loss = 0.0;
  std::vector<std::string> ids;  // subset members, manifest order
};

struct DataEffReport {
  std::vector<DataEffRow> rows;
};

/// Nested subsets: a seeded permutation of source groups, cut at each size.
std::vector<std::vector<std::size_t>> nested_subsets(const DatasetManifest& manifest, const std::vector<int>& sizes,
                                                     std::uint64_t seed);

DataEffReport cmd_data_eff(const DatasetManifest& manifest, const RunConfig& cfg, const std::filesystem::path& out,
                           std::ostream& log);

struct DockModeSummary {
  ServoMode mode = ServoMode::continuous;
  std::vector<TrialResult> trials;
  std::size_t successes = 0;
  double median_final_error = 0.0;  // over the paired seeds
};

struct DockReport {
  bool oracle = false;
  std::vector<DockModeSummary> modes;  // continuous, then single-shot
};

/// Runs `trials` seeded trials in both servo modes. The network drives the
/// vessel unless evaluation.oracle is set or no weights are given.
DockReport cmd_dock(const RunConfig& cfg, const std::optional<std::filesystem::path>& weights, int trials,
                    const std::filesystem::path& out, std::ostream& log);

/// Collects every stage summary under `out` into report.txt and report.json.
std::string cmd_report(const std::filesystem::path& out, std::ostream& log);

}  // namespace dockpilot
