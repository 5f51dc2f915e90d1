#include <doctest.h>

#include "fatnet/errors.hpp"
#include "sweep_oracle.hpp"

using namespace fatnet;

TEST_CASE("toy sweeps equal the network-surgery oracle") {
  const auto toy = testutil::trained_toy(64, 3);
  for (SweepMode mode : {SweepMode::channel, SweepMode::pixel}) {
    const SweepReport r = sweep(toy.net, toy.data, mode, {.workers = 1, .batch_size = 17});
    CHECK(r.entries.size() == expected_configurations(toy.net, mode));
    CHECK(testutil::oracle_mismatches(toy.net, toy.data, r) == 0);
  }
}

TEST_CASE("2-bit toy sweeps equal the oracle") {
  const auto toy = testutil::trained_toy(48, 4, 2);
  const SweepReport r = sweep_channels(toy.net, toy.data);
  CHECK(r.sites.at(0).values.size() == 3);
  CHECK(testutil::oracle_mismatches(toy.net, toy.data, r) == 0);
}

TEST_CASE("configuration counts") {
  const Network cnv = build_topology({});
  CHECK(expected_configurations(cnv, SweepMode::channel) == (16 + 32 + 64) * 2);
  const auto sites = describe_sites(cnv);
  REQUIRE(sites.size() == 3);
  std::size_t pixels = 0;
  for (const auto& s : sites) pixels += s.shape.plane() * 2;
  CHECK(expected_configurations(cnv, SweepMode::pixel) == pixels);
  CHECK(pixels == (13 * 13 + 5 * 5 + 3 * 3) * 2);

  const auto toy = testutil::toy_network(1, 2);
  CHECK(expected_configurations(toy, SweepMode::channel) == (4 + 6) * 3);
  CHECK(expected_configurations(toy, SweepMode::pixel) == (9 + 1) * 3);
}

TEST_CASE("error-free evaluation is the unclamped forward") {
  const auto toy = testutil::trained_toy(40, 5);
  CHECK(count_correct(toy.net, toy.data).correct == testutil::oracle_correct(toy.net, toy.data, std::nullopt));
}

TEST_CASE("clamping to the value a plane already holds changes nothing") {
  auto toy = testutil::trained_toy(40, 6);
  // Zero the weights feeding FC hidden unit 0 so its 1-bit activation is
  // sign(BN(0)); with beta > 0 it is +1 for every input.
  const std::size_t fc = toy.net.producing_layer(toy.net.fault_sites()[1]);
  auto& w = toy.net.layer(fc).parameters()[0]->value;
  const std::size_t fan_in = w.shape().c;
  for (std::size_t i = 0; i < fan_in; ++i) w[i] = 0.0f;
  auto& bn = dynamic_cast<BatchNormLayer&>(toy.net.layer(fc + 1));
  bn.beta().value[0] = 0.5f;
  bn.running_mean().value[0] = 0.0f;
  FaultSpec f{.site = 1, .target = SweepMode::channel, .channel = 0, .value = 1.0f};
  CHECK(count_correct(toy.net, toy.data, f).correct == count_correct(toy.net, toy.data).correct);
}

TEST_CASE("invalid faults") {
  const auto toy = testutil::toy_network(1);
  CHECK_THROWS_AS(validate_fault(toy, {.site = 2}), ConfigError);
  CHECK_THROWS_AS(validate_fault(toy, {.site = 0, .channel = 4, .value = 1.0f}), ConfigError);
  CHECK_THROWS_AS(validate_fault(toy, {.site = 0, .value = 0.0f}), ConfigError);
  CHECK_NOTHROW(validate_fault(toy, {.site = 0, .channel = 3, .value = -1.0f}));
}

TEST_CASE("variance, extremes and summaries") {
  const auto toy = testutil::trained_toy(64, 7);
  const SweepReport r = sweep_channels(toy.net, toy.data);

  // Two-pass population variance.
  double mean = 0.0;
  for (const auto& e : r.entries) mean += e.accuracy;
  mean /= r.entries.size();
  double var = 0.0;
  for (const auto& e : r.entries) var += (e.accuracy - mean) * (e.accuracy - mean);
  CHECK(r.variance == doctest::Approx(var / r.entries.size()).epsilon(1e-12));
  CHECK(population_variance({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(1.25));

  // Extremes by independent scan.
  for (const LayerExtremes& x : r.extremes) {
    double lo = 101, hi = -1;
    std::size_t n = 0;
    for (const auto& e : r.entries) {
      if (e.fault.site != x.site || e.fault.value != x.value) continue;
      lo = std::min(lo, e.accuracy);
      hi = std::max(hi, e.accuracy);
      ++n;
    }
    CHECK(x.min_accuracy == lo);
    CHECK(x.max_accuracy == hi);
    CHECK(x.targets == n);
  }
  const ReportSummary s = summarize(r);
  CHECK(s.rows.size() == 2);
  CHECK(s.scatter.min_accuracy == r.min_accuracy());
  CHECK(s.scatter.error_free == r.error_free);
}

TEST_CASE("single-configuration report and empty sites") {
  SweepReport r;
  r.error_free = 90.0;
  r.sites = {{0, 3, {1, 1, 1, 1}, {1.0f}}, {1, 7, {1, 2, 1, 1}, {1.0f}}};
  r.entries = {{{.site = 0, .value = 1.0f}, 40, 80.0}};
  finalize_report(r);
  CHECK(r.min_accuracy() == 80.0);
  CHECK(r.max_accuracy() == 80.0);
  CHECK(r.variance == 0.0);
  const auto s = summarize(r);
  REQUIRE(s.rows.size() == 1);
  CHECK(s.rows[0].site == 0);
}

TEST_CASE("sweep results do not depend on worker count or batch size") {
  const auto toy = testutil::trained_toy(64, 8);
  const SweepReport a = sweep_pixels(toy.net, toy.data, {.workers = 1, .batch_size = 64});
  const SweepReport b = sweep_pixels(toy.net, toy.data, {.workers = 4, .batch_size = 10});
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].fault.target_index(a.sites[a.entries[i].fault.site].shape) ==
          b.entries[i].fault.target_index(b.sites[b.entries[i].fault.site].shape));
    CHECK(a.entries[i].correct == b.entries[i].correct);
  }
  CHECK(a.variance == b.variance);
}
