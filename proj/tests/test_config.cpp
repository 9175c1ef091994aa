#include <doctest.h>

#include "dockpilot/config.hpp"

using namespace dockpilot;

TEST_CASE("config dump round trip") {
  RunConfig c = default_config();
  c.collection.scenes = 3;
  c.network.conv_filters = {4, 8};
  c.training.learning_rate = 0.0123456789012345;
  c.evaluation.oracle = true;
  c.finalize();
  const std::string text = dump_config(c);
  const RunConfig back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(back.training.learning_rate == c.training.learning_rate);
  CHECK(back.network.conv_filters == std::vector<int>{4, 8});
}

TEST_CASE("partial configs keep defaults") {
  const RunConfig c = parse_config("# comment\n[training]\nepochs = 3 # trailing\n\n[collection]\nscenes = 2\n");
  CHECK(c.training.epochs == 3);
  CHECK(c.collection.scenes == 2);
  CHECK(c.training.batch_size == 32);
  CHECK(config_hash(parse_config("")) == config_hash(default_config()));
}

TEST_CASE("config errors") {
  CHECK_THROWS(parse_config("[training]\nepoch = 3\n"));
  CHECK_THROWS(parse_config("[nosuch]\nx = 1\n"));
  CHECK_THROWS(parse_config("[training]\nepochs = abc\n"));
  CHECK_THROWS(parse_config("epochs = 3\n"));
  CHECK_THROWS(parse_config("[training]\nepochs\n"));
  CHECK_THROWS(parse_config("[controller]\npwm_min = 2\npwm_max = 1\n"));
  CHECK_THROWS(parse_config("[evaluation]\ndata_eff_sizes = [400, 200]\n"));
  CHECK_THROWS(load_config("/nonexistent/dockpilot.toml"));
}

TEST_CASE("config hash tracks every change") {
  const std::string base = config_hash(default_config());
  CHECK(base.size() == 16);
  RunConfig c = default_config();
  c.augmentation.seed += 1;
  c.finalize();
  CHECK(config_hash(c) != base);
  c = default_config();
  c.scene.block_height = 0.31;
  c.finalize();
  CHECK(config_hash(c) != base);
}

TEST_CASE("finalize pushes shared values") {
  RunConfig c = default_config();
  c.plant.alpha = 0.5;
  c.scene.block_brightness = 200;
  c.finalize();
  CHECK(c.controller.alpha == 0.5);
  CHECK(c.collection.scene.block_brightness == 200);
}
