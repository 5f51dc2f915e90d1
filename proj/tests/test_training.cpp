#include <doctest.h>

#include <filesystem>

#include "fatnet/checkpoint.hpp"
#include "fatnet/errors.hpp"
#include "fatnet/training.hpp"
#include "test_util.hpp"

using namespace fatnet;

static TrainConfig toy_config(TrainMethod m, std::optional<double> p = std::nullopt) {
  TrainConfig c;
  c.method = m;
  c.p_percent = p;
  c.topology = "toy";
  c.epochs = 3;
  c.batch_size = 32;
  c.seed = 42;
  c.epoch_eval_samples = 64;
  return c;
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  CHECK(lr_schedule(0, c) == 0.02);
  CHECK(lr_schedule(39, c) == 0.02);
  CHECK(lr_schedule(40, c) == 0.01);
  CHECK(lr_schedule(80, c) == 0.005);
  CHECK(lr_schedule(120, c) == 0.0025);
}

TEST_CASE("epoch layer selection") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(select_epoch_layer(i, 1, rng) == 0);
  std::vector<double> counts(4);
  for (int e = 0; e < 100000; ++e) counts[select_epoch_layer(e, 4, rng)] += 1;
  for (double c : counts) CHECK(std::abs(c / 1e5 - 0.25) <= 0.01);
  CHECK_THROWS_AS(select_epoch_layer(0, 0, rng), ConfigError);
}

TEST_CASE("epoch plans") {
  Rng rng(2);
  CHECK(plan_epoch(0, 3, TrainMethod::sat, rng).enabled_count() == 0);
  CHECK(plan_epoch(0, 3, TrainMethod::sat, rng).label() == "none");
  CHECK(plan_epoch(0, 3, TrainMethod::fat1, rng).enabled_count() == 3);
  CHECK(plan_epoch(0, 3, TrainMethod::fat1, rng).label() == "all");

  Rng a = substream(5, "fat2-layer-choice"), b = substream(5, "fat2-layer-choice");
  for (std::size_t e = 0; e < 10; ++e) {
    const EpochPlan p = plan_epoch(e, 4, TrainMethod::fat2, a);
    const EpochPlan q = plan_epoch(e, 4, TrainMethod::fat2, b);
    CHECK(p.enabled_count() == 1);
    REQUIRE(p.chosen.has_value());
    CHECK(p.status[*p.chosen] == InjectionStatus::enable);
    CHECK(p.chosen == q.chosen);
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(toy_config(TrainMethod::fat1).validate(), ConfigError);
  CHECK_THROWS_AS(toy_config(TrainMethod::fat2, 120.0).validate(), ConfigError);
  CHECK_THROWS_AS(toy_config(TrainMethod::dropout2d, 100.0).validate(), ConfigError);
  CHECK_NOTHROW(toy_config(TrainMethod::fat1, 100.0).validate());
  CHECK_NOTHROW(toy_config(TrainMethod::sat).validate());
  TrainConfig c = toy_config(TrainMethod::sat);
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_train_method("dropout2d-baseline") == TrainMethod::dropout2d);
  CHECK_THROWS_AS(parse_train_method("fat3"), ConfigError);
}

TEST_CASE("network preparation per method") {
  const Shape4 in{1, 1, 8, 8};
  Network fat = prepare_network(toy_config(TrainMethod::fat2, 5.0), in, 4);
  REQUIRE(fat.injection_layers().size() == 2);
  CHECK(fat.injection_layers()[0]->config().p_percent == 5.0);

  const Network drop = prepare_network(toy_config(TrainMethod::dropout2d, 2.5), in, 4);
  const auto sites = drop.fault_sites();
  REQUIRE(sites.size() == 2);
  for (std::size_t s : sites) {
    CHECK(drop.layer(s).kind() == LayerKind::dropout2d);
    CHECK(drop.layer(s).spec().probability == doctest::Approx(0.025));
  }
  // Same weights regardless of method.
  const Network sat = prepare_network(toy_config(TrainMethod::sat), in, 4);
  CHECK(parameter_hash(sat) == parameter_hash(drop));
}

TEST_CASE("sat training equals training without injection layers") {
  const Dataset train_set = testutil::band_dataset(200, 8, 4, 1);
  const Dataset test_set = testutil::band_dataset(64, 8, 4, 2);
  const TrainConfig cfg = toy_config(TrainMethod::sat);
  const Network with = prepare_network(cfg, train_set.sample_shape(), 4);
  Network without(with.input_shape(), with.classes(), with.id());
  for (std::size_t i = 0; i < with.size(); ++i)
    if (with.layer(i).kind() != LayerKind::injection) without.add(with.layer(i).clone());

  const TrainResult a = train_network(with, cfg, train_set, test_set);
  const TrainResult b = train_network(without, cfg, train_set, test_set);
  CHECK(parameter_hash(a.network) == parameter_hash(b.network));
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t e = 0; e < a.log.size(); ++e) {
    CHECK(a.log[e].loss == b.log[e].loss);
    CHECK(a.log[e].enabled_layer == "none");
  }
}

TEST_CASE("training is reproducible and learns the toy task") {
  const Dataset train_set = testutil::band_dataset(400, 8, 4, 3);
  const Dataset test_set = testutil::band_dataset(100, 8, 4, 4);
  TrainConfig cfg = toy_config(TrainMethod::fat2, 10.0);
  cfg.epochs = 6;
  const TrainResult a = train(cfg, train_set, test_set);
  const TrainResult b = train(cfg, train_set, test_set);
  CHECK(parameter_hash(a.network) == parameter_hash(b.network));
  for (std::size_t e = 0; e < a.log.size(); ++e) {
    CHECK(a.log[e].enabled_layer == b.log[e].enabled_layer);
    CHECK(a.plans[e].enabled_count() == 1);
  }
  CHECK(a.log.back().loss < a.log.front().loss);
  CHECK(a.log.back().test_accuracy > 60.0);

  cfg.seed = 43;
  CHECK(parameter_hash(train(cfg, train_set, test_set).network) != parameter_hash(a.network));
}

TEST_CASE("weights stay inside the clip range") {
  const Dataset data = testutil::band_dataset(100, 8, 4, 5);
  const TrainResult r = train(toy_config(TrainMethod::fat1, 20.0), data, data);
  Network net = r.network;
  for (Parameter* p : net.parameters())
    if (p->name == "weight")
      for (float v : p->value.values()) CHECK(std::abs(v) <= 1.0f);
}

TEST_CASE("dropout2d baseline trains") {
  const Dataset data = testutil::band_dataset(100, 8, 4, 6);
  const TrainResult r = train(toy_config(TrainMethod::dropout2d, 25.0), data, data);
  CHECK(r.log.size() == 3);
  CHECK(r.log[0].enabled_layer == "all");
}

TEST_CASE("training log round trip") {
  const std::vector<EpochLog> log{{0, 1.25, 50.5, 0.02, "1", 10}, {1, 0.75, 61.0, 0.02, "none", 10}};
  const auto path = std::filesystem::temp_directory_path() / "fatnet_log_test.csv";
  write_training_log(path, log);
  const auto back = read_training_log(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].enabled_layer == "none");
  CHECK(back[0].loss == 1.25);
  CHECK(back[1].test_accuracy == 61.0);
  std::filesystem::remove(path);
}
