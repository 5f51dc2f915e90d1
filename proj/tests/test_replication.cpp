#include <doctest.h>

#include <algorithm>

#include "fatnet/errors.hpp"
#include "replication_checks.hpp"
#include "sweep_oracle.hpp"

using namespace fatnet;

static SweepEntry entry(std::size_t site, std::size_t ch, float v, double acc) {
  return {{.site = site, .target = SweepMode::channel, .channel = ch, .value = v}, 0, acc};
}

static SweepReport small_report() {
  SweepReport r;
  r.error_free = 90.0;
  r.sites = {{0, 1, {1, 3, 2, 2}, {-1.0f, 1.0f}}};
  r.entries = {entry(0, 0, -1, 85), entry(0, 1, -1, 50), entry(0, 2, -1, 88),
               entry(0, 0, 1, 82), entry(0, 1, 1, 89), entry(0, 2, 1, 70)};
  finalize_report(r);
  return r;
}

TEST_CASE("ranking") {
  const auto rank = rank_channels(small_report());
  REQUIRE(rank.size() == 3);
  CHECK(rank[0].channel == ChannelId{0, 1});
  CHECK(rank[0].worst_accuracy == 50.0);
  CHECK(rank[1].channel == ChannelId{0, 2});
  CHECK(rank[2].channel == ChannelId{0, 0});
  CHECK(rank[0].worst_case_error() == 50.0);

  SweepReport flat = small_report();
  for (auto& e : flat.entries) e.accuracy = 90.0;
  const auto f = rank_channels(flat);
  for (std::size_t i = 0; i < 3; ++i) CHECK(f[i].channel == ChannelId{0, i});

  SweepReport px = small_report();
  px.mode = SweepMode::pixel;
  CHECK_THROWS_AS(rank_channels(px), ConfigError);
}

TEST_CASE("ranking equals an independent re-sort") {
  const auto toy = testutil::trained_toy(64, 12);
  const SweepReport r = sweep_channels(toy.net, toy.data);
  std::vector<std::tuple<double, std::size_t, std::size_t>> oracle;
  for (const auto& s : r.sites)
    for (std::size_t c = 0; c < s.shape.c; ++c) {
      double worst = 1e9;
      for (const auto& e : r.entries)
        if (e.fault.site == s.site && e.fault.channel == c) worst = std::min(worst, e.accuracy);
      oracle.emplace_back(worst, s.site, c);
    }
  std::sort(oracle.begin(), oracle.end());
  const auto rank = rank_channels(r);
  REQUIRE(rank.size() == oracle.size());
  for (std::size_t i = 0; i < rank.size(); ++i) {
    CHECK(rank[i].worst_accuracy == std::get<0>(oracle[i]));
    CHECK(rank[i].channel == ChannelId{std::get<1>(oracle[i]), std::get<2>(oracle[i])});
  }
}

TEST_CASE("channel cost formula") {
  LayerSpec fc{.kind = LayerKind::fully_connected, .in_channels = 256, .out_channels = 10};
  CHECK(channel_cost(fc, {1, 10, 1, 1}, 1, 1) == 256.0);
  LayerSpec conv{.kind = LayerKind::conv2d, .in_channels = 64, .out_channels = 64, .kernel = 3};
  CHECK(channel_cost(conv, {1, 64, 8, 8}, 1, 1) == 36864.0);
  CHECK(channel_cost(conv, {1, 64, 8, 8}, 1, 2) == 2 * 36864.0);
  CHECK_THROWS_AS(channel_cost({.kind = LayerKind::max_pool}, {1, 1, 1, 1}, 1, 1), ConfigError);
}

TEST_CASE("cost model of cnv-s") {
  const CostModel m = build_cost_model(build_topology({}));
  CHECK(m.entries.size() == 16 + 32 + 64);
  CHECK(m.channel({0, 0}) == 3 * 3 * 1 * 26 * 26);
  CHECK(m.channel({1, 5}) == 3 * 3 * 16 * 11 * 11);
  CHECK(m.channel({2, 63}) == 3 * 3 * 32 * 3 * 3);
  CHECK(m.baseline() == doctest::Approx(16.0 * 6084 + 32.0 * 17424 + 64.0 * 2592));
}

TEST_CASE("plan cost") {
  const CostModel m{{{{0, 0}, 10.0}, {{0, 1}, 20.0}, {{1, 0}, 5.0}}, 3.0};
  CHECK(plan_cost(m, {}) == 35.0);
  CHECK(plan_cost(m, {{0, 0}, {0, 1}, {1, 0}}) == 105.0);
  CHECK(plan_cost(m, {{0, 1}}) == 10.0 + 60.0 + 5.0);
  CHECK_THROWS_AS(plan_cost(m, {{4, 4}}), ConfigError);
}

TEST_CASE("worst-case error") {
  const SweepReport r = small_report();
  CHECK(worst_case_error(r, {}) == 50.0);
  CHECK(worst_case_error(r, {{0, 0}, {0, 1}, {0, 2}}) == 10.0);
  // Filter-and-min oracle after protecting the most critical channel.
  double second = 1e9;
  for (const auto& e : r.entries)
    if (e.fault.channel != 1) second = std::min(second, e.accuracy);
  CHECK(worst_case_error(r, {{0, 1}}) == 100.0 - second);
}

TEST_CASE("frontier") {
  const SweepReport r = small_report();
  const CostModel m{{{{0, 0}, 10.0}, {{0, 1}, 20.0}, {{0, 2}, 5.0}}, 3.0};
  const auto f = pareto_frontier(r, m);
  REQUIRE(f.size() == 4);
  CHECK(f[0].cost == 35.0);
  CHECK(f[0].worst_case_error == 50.0);
  CHECK(f[1].cost == 75.0);
  CHECK(f[1].worst_case_error == 30.0);
  CHECK(f[3].cost == 105.0);
  CHECK(f[3].worst_case_error == 10.0);
  CHECK(f[0].plan_hash == plan_hash({}));
  CHECK(f[1].plan_hash == plan_hash({{0, 1}}));
  CHECK(f[1].plan_hash != f[2].plan_hash);
  for (const auto& p : f) CHECK_FALSE(p.dominated);
  CHECK(cost_for_error(f, 30.0) == 75.0);
  CHECK_FALSE(cost_for_error(f, 5.0).has_value());
}

TEST_CASE("dominance marking") {
  std::vector<FrontierPoint> pts{{0, 0, 10, 50, false}, {1, 0, 20, 50, false}, {2, 0, 30, 20, false}};
  mark_dominated(pts);
  CHECK_FALSE(pts[0].dominated);
  CHECK(pts[1].dominated);
  CHECK_FALSE(pts[2].dominated);
}

TEST_CASE("planner properties on random small reports") {
  Rng rng(31);
  for (int t = 0; t < 40; ++t) {
    const std::vector<std::size_t> sites{1 + uniform_index(rng, 5), 1 + uniform_index(rng, 6)};
    const SweepReport r = testutil::random_channel_report(sites, rng);
    const auto violations = testutil::replication_violations(r, testutil::random_cost_model(r, rng));
    for (const auto& v : violations) FAIL_CHECK(v);
  }
}

TEST_CASE("planner properties on a toy sweep") {
  const auto toy = testutil::trained_toy(64, 13);
  const SweepReport r = sweep_channels(toy.net, toy.data);
  for (const auto& v : testutil::replication_violations(r, build_cost_model(toy.net))) FAIL_CHECK(v);
}
