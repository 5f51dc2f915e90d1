#pragma once

// Runs the fatnet CLI end to end (train, channel and pixel sweeps, pareto,
// report) into a directory. Shared by the CLI test and the acceptance binary.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace testutil {

namespace fs = std::filesystem;

inline int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct PipelineResult {
  std::vector<std::string> failures;
  fs::path out;
};

// Smoke pipeline: 2 epochs of fat2 on a 512-sample training subset.
inline PipelineResult run_pipeline(const std::string& cli, const std::string& data_dir, const fs::path& dir,
                                   std::size_t workers = 1) {
  PipelineResult res;
  fs::remove_all(dir);
  fs::create_directories(dir);
  res.out = dir / "out";
  const fs::path cfg = dir / "smoke.cfg";
  std::ofstream(cfg) << "name = smoke\nmethod = fat2\np = 5\nfault_model = channel\nepochs = 2\n"
                        "seed = 3\ntrain_limit = 512\nepoch_eval_samples = 200\nsubset_size = 100\n"
                        "checkpoint_every = 1\ndata_dir = " << data_dir << "\n";
  const fs::path log = dir / "cli.log";
  const std::string common = "--config \"" + cfg.string() + "\" --out-dir \"" + res.out.string() + "\"";
  const auto step = [&](const std::string& what, const std::string& args) {
    if (run_cli(cli, args, log) != 0) res.failures.push_back(what + " exited nonzero (see " + log.string() + ")");
  };
  step("train", "train " + common);
  const std::string ckpt = "--checkpoint \"" + (res.out / "smoke.ckpt").string() + "\"";
  step("sweep channel", "sweep " + common + " " + ckpt + " --mode channel --workers " + std::to_string(workers));
  step("sweep pixel", "sweep " + common + " " + ckpt + " --mode pixel --workers " + std::to_string(workers));
  step("pareto", "pareto " + common + " " + ckpt + " --report \"" + (res.out / "smoke_channel_report.json").string() + "\"");
  step("report", "report " + common + " \"" + (res.out / "smoke_channel_report.json").string() + "\" \"" +
                     (res.out / "smoke_pixel_report.json").string() + "\"");
  return res;
}

// Report files that must be byte-identical between runs (run metadata excluded).
inline std::vector<std::string> deterministic_outputs() {
  return {"smoke.ckpt",          "smoke_epoch001.ckpt",       "smoke_train_log.csv",      "smoke_channel_report.csv",
          "smoke_channel_report.json", "smoke_channel_summary.csv", "smoke_pixel_report.csv",
          "smoke_pixel_report.json", "smoke_pixel_summary.csv", "smoke_frontier.csv", "scatter.csv"};
}

inline std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
