#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "dockpilot/harness.hpp"
#include "dockpilot/util.hpp"

using namespace dockpilot;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"dockpilot: synthetic USV docking pipeline"};
  app.require_subcommand(1);

  struct Opts {
    std::string config, out, weights, manifest;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
  } o;

  auto add = [&](const std::string& name, const std::string& help, bool manifest, bool weights, bool trials) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("--config", o.config, "config file (defaults if omitted)");
    sc->add_option("--out", o.out, "output directory")->required();
    if (name != "report") sc->add_option("--seed", o.seed, "override the stage seed");
    if (manifest) sc->add_option("--manifest", o.manifest, "input manifest.jsonl")->required();
    if (weights) sc->add_option("--weights", o.weights, "weights.bin from train");
    if (trials) sc->add_option("--trials", o.trials, "number of seeded trials");
    return sc;
  };
  auto* collect = add("collect", "auto-labelled data collection", false, false, false);
  auto* augment = add("augment", "add augmented copies of a manifest", true, false, false);
  auto* train = add("train", "train the pose network", true, false, false);
  auto* eval = add("eval", "single-frame error analysis", true, true, false);
  auto* data_eff = add("data-eff", "loss against dataset size", true, false, false);
  auto* dock = add("dock", "closed-loop docking trials", false, true, true);
  auto* report = add("report", "summarize every stage under --out", false, false, false);
  eval->get_option("--weights")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    configure_threads();
    const fs::path out = o.out;
    if (report->parsed()) {
      std::cout << cmd_report(out, std::cerr);
      return 0;
    }
    RunConfig cfg = o.config.empty() ? default_config() : load_config(o.config);
    if (o.seed) {
      if (collect->parsed()) cfg.collection.seed = *o.seed;
      if (augment->parsed()) cfg.augmentation.seed = *o.seed;
      if (train->parsed() || eval->parsed()) cfg.training.seed = *o.seed;
      if (data_eff->parsed()) cfg.evaluation.data_eff_seed = *o.seed;
      if (dock->parsed()) cfg.evaluation.trial_seed = *o.seed;
    }
    cfg.finalize();
    if (collect->parsed()) {
      cmd_collect(cfg, out, std::cerr);
    } else if (augment->parsed()) {
      cmd_augment(read_manifest(o.manifest), cfg, out, std::cerr);
    } else if (train->parsed()) {
      cmd_train(read_manifest(o.manifest), cfg, out, std::cerr);
    } else if (eval->parsed()) {
      cmd_eval(read_manifest(o.manifest), o.weights, cfg, out, std::cerr);
    } else if (data_eff->parsed()) {
      cmd_data_eff(read_manifest(o.manifest), cfg, out, std::cerr);
    } else if (dock->parsed()) {
      std::optional<fs::path> w;
      if (!o.weights.empty()) w = o.weights;
      cmd_dock(cfg, w, o.trials.value_or(cfg.evaluation.trials), out, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
