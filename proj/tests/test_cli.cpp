#include <doctest.h>

#include <json.hpp>

#include "cli_pipeline.hpp"
#include "fatnet/checkpoint.hpp"
#include "fatnet/report_io.hpp"
#include "fatnet/training.hpp"
#include "test_util.hpp"

using namespace fatnet;
namespace fs = std::filesystem;

static const fs::path kWork = fs::temp_directory_path() / "fatnet_cli_test";

TEST_CASE("end-to-end smoke pipeline; every output parses") {
  const std::string data = testutil::test_data_dir();
  REQUIRE_FALSE(data.empty());
  const auto res = testutil::run_pipeline(FATNET_CLI_PATH, data, kWork / "run");
  for (const auto& f : res.failures) FAIL_CHECK(f);
  const fs::path o = res.out;

  const Network net = load_checkpoint(o / "smoke.ckpt");
  CHECK(net.id() == "smoke");
  CHECK(deserialize_network(serialize_network(net)).size() == net.size());
  CHECK(fs::exists(o / "smoke_epoch001.ckpt"));
  const auto log = read_training_log(o / "smoke_train_log.csv");
  CHECK(log.size() == 2);

  for (const char* mode : {"channel", "pixel"}) {
    const std::string stem = std::string("smoke_") + mode;
    const SweepReport r = parse_report_json(read_text(o / (stem + "_report.json")));
    CHECK(r.eval_samples == 100);
    CHECK(r.entries.size() == expected_configurations(net, parse_sweep_mode(mode)));
    CHECK(format_report_json(r) == read_text(o / (stem + "_report.json")));
    CHECK(format_report_csv(r) == read_text(o / (stem + "_report.csv")));
    CHECK(parse_report_csv(read_text(o / (stem + "_report.csv"))).size() == r.entries.size());
    CHECK(parse_summary_csv(read_text(o / (stem + "_summary.csv"))).size() == 3);
    const auto meta = nlohmann::json::parse(read_text(o / (stem + "_run_meta.json")));
    CHECK(meta.at("schema") == "fatnet.run_meta");
    CHECK(meta.at("configurations") == r.entries.size());
  }
  const auto frontier = parse_frontier_csv(read_text(o / "smoke_frontier.csv"));
  CHECK(frontier.size() == 16 + 32 + 64 + 1);
  CHECK(format_frontier_csv(frontier) == read_text(o / "smoke_frontier.csv"));
  const auto scatter = parse_scatter_csv(read_text(o / "scatter.csv"));
  REQUIRE(scatter.size() == 2);
  CHECK(scatter[0].network == "smoke");
  const auto fmeta = nlohmann::json::parse(read_text(o / "smoke_frontier_meta.json"));
  CHECK(fmeta.at("schema") == "fatnet.frontier_meta");
}

TEST_CASE("missing config key is a config error with exit code 2") {
  fs::create_directories(kWork);
  const fs::path cfg = kWork / "bad.cfg";
  std::ofstream(cfg) << "epochs = 1\n";
  const fs::path log = kWork / "bad.log";
  fs::remove(log);
  CHECK(testutil::run_cli(FATNET_CLI_PATH, "train --config \"" + cfg.string() + "\"", log) == 2);
  const std::string out = testutil::slurp(log);
  CHECK(out.find("error[config]") != std::string::npos);
  CHECK(out.find("method") != std::string::npos);

  std::ofstream(cfg) << "method = sat\nbogus = 1\n";
  CHECK(testutil::run_cli(FATNET_CLI_PATH, "train --config \"" + cfg.string() + "\"", log) == 2);
  CHECK(testutil::slurp(log).find("bogus") != std::string::npos);
}

TEST_CASE("corrupt inputs map to format and io exit codes") {
  fs::create_directories(kWork);
  const fs::path junk = kWork / "junk.json";
  std::ofstream(junk) << "{not json";
  const fs::path log = kWork / "codes.log";
  CHECK(testutil::run_cli(FATNET_CLI_PATH, "report \"" + junk.string() + "\" --out-dir \"" + kWork.string() + "\"",
                          log) == 3);
  CHECK(testutil::run_cli(FATNET_CLI_PATH, "report \"" + (kWork / "nope.json").string() + "\"", log) == 4);
}
