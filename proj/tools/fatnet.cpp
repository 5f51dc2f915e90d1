// fatnet: train / sweep / pareto / report front end.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fatnet/checkpoint.hpp"
#include "fatnet/config.hpp"
#include "fatnet/errors.hpp"
#include "fatnet/evaluation.hpp"
#include "fatnet/replication.hpp"
#include "fatnet/report_io.hpp"
#include "fatnet/training.hpp"

namespace fs = std::filesystem;
using namespace fatnet;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> subset_size;
};

ExperimentConfig resolve_config(const CommonFlags& f, bool required) {
  ExperimentConfig cfg;
  if (!f.config.empty()) {
    cfg = load_config(f.config);
  } else if (required) {
    throw ConfigError("missing --config");
  }
  if (f.seed) set_config_value(cfg, "seed", std::to_string(*f.seed));
  if (f.workers) set_config_value(cfg, "workers", std::to_string(*f.workers));
  if (f.out_dir) set_config_value(cfg, "out_dir", *f.out_dir);
  if (f.subset_size) set_config_value(cfg, "subset_size", std::to_string(*f.subset_size));
  return cfg;
}

fs::path prepare_out_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());
  return cfg.out_dir;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config, "experiment config file (key = value)");
  if (config_required) opt->required();
  cmd->add_option("--seed", f.seed, "override the global seed");
  cmd->add_option("--workers", f.workers, "sweep worker threads, 0 = all cores");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_option("--subset-size", f.subset_size, "evaluation subset size");
}

void write_meta(const fs::path& path, const nlohmann::json& meta) { write_text(path, meta.dump(1) + "\n"); }

int cmd_train(const CommonFlags& flags) {
  const ExperimentConfig cfg = resolve_config(flags, true);
  cfg.require({"method"});
  cfg.train.validate();
  const DatasetHandle data = load_configured_dataset(cfg);
  const fs::path out = prepare_out_dir(cfg);
  const std::string name = cfg.run_name();

  Network net = prepare_network(cfg.train, data.image_shape, data.classes);
  net.set_id(name);
  const auto on_epoch = [&](const EpochLog& e, const Network& n) {
    std::fprintf(stderr, "epoch %zu loss %.4f test_acc %.2f lr %.6g layer %s\n", e.epoch, e.loss, e.test_accuracy,
                 e.lr, e.enabled_layer.c_str());
    if (cfg.checkpoint_every != 0 && (e.epoch + 1) % cfg.checkpoint_every == 0 && e.epoch + 1 < cfg.train.epochs) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "_epoch%03zu.ckpt", e.epoch + 1);
      save_checkpoint(n, out / (name + buf));
    }
  };
  const TrainResult result = train_network(std::move(net), cfg.train, data.train, data.test, on_epoch);
  save_checkpoint(result.network, out / (name + ".ckpt"));
  write_training_log(out / (name + "_train_log.csv"), result.log);
  std::cout << (out / (name + ".ckpt")).string() << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& checkpoint, const std::string& mode_flag) {
  ExperimentConfig cfg = resolve_config(flags, true);
  if (!mode_flag.empty()) cfg.sweep_mode = parse_sweep_mode(mode_flag);
  const Network net = load_checkpoint(checkpoint);
  const DatasetHandle data = load_configured_dataset(cfg);
  const Dataset eval = data.test.random_subset(cfg.subset_size, cfg.train.seed, "eval-subset");
  const fs::path out = prepare_out_dir(cfg);

  SweepOptions opts;
  opts.workers = cfg.workers;
  opts.dataset_name = data.name;
  const SweepReport report = sweep(net, eval, cfg.sweep_mode, opts);

  const std::string stem = net.id() + "_" + to_string(cfg.sweep_mode);
  write_text(out / (stem + "_report.csv"), format_report_csv(report));
  write_text(out / (stem + "_summary.csv"), format_summary_csv(report));
  write_text(out / (stem + "_report.json"), format_report_json(report));
  write_meta(out / (stem + "_run_meta.json"), {{"schema", "fatnet.run_meta"},
                                               {"version", 1},
                                               {"command", "sweep"},
                                               {"checkpoint", checkpoint},
                                               {"configurations", report.entries.size()},
                                               {"wall_seconds", report.wall_seconds},
                                               {"workers", report.workers}});
  std::fprintf(stderr, "%zu configurations, error-free %.2f, min %.2f, max %.2f, %.1f s\n", report.entries.size(),
               report.error_free, report.min_accuracy(), report.max_accuracy(), report.wall_seconds);
  std::cout << (out / (stem + "_report.json")).string() << "\n";
  return 0;
}

int cmd_pareto(const CommonFlags& flags, const std::string& report_path, const std::string& checkpoint) {
  const ExperimentConfig cfg = resolve_config(flags, false);
  const SweepReport report = parse_report_json(read_text(report_path));
  const Network net = load_checkpoint(checkpoint);
  if (net.id() != report.network_id) {
    throw ConfigError("report was produced by network '" + report.network_id + "', checkpoint is '" + net.id() + "'");
  }
  const CostModel model = build_cost_model(net, cfg.replication_factor);
  const auto frontier = pareto_frontier(report, model);
  const fs::path out = prepare_out_dir(cfg);
  const std::string stem = net.id();
  write_text(out / (stem + "_frontier.csv"), format_frontier_csv(frontier));
  write_meta(out / (stem + "_frontier_meta.json"), {{"schema", "fatnet.frontier_meta"},
                                                    {"version", 1},
                                                    {"report", report_path},
                                                    {"checkpoint", checkpoint},
                                                    {"cost_layers", "all swept fault sites (conv and fc)"},
                                                    {"replication_factor", cfg.replication_factor},
                                                    {"baseline_cost", model.baseline()}});
  std::cout << (out / (stem + "_frontier.csv")).string() << "\n";
  return 0;
}

int cmd_report(const CommonFlags& flags, const std::vector<std::string>& reports) {
  const ExperimentConfig cfg = resolve_config(flags, false);
  const fs::path out = prepare_out_dir(cfg);
  std::vector<ScatterPoint> scatter;
  for (const std::string& path : reports) {
    const SweepReport r = parse_report_json(read_text(path));
    const std::string stem = r.network_id + "_" + to_string(r.mode);
    write_text(out / (stem + "_summary.csv"), format_summary_csv(r));
    scatter.push_back(summarize(r).scatter);
  }
  write_text(out / "scatter.csv", format_scatter_csv(scatter));
  std::cout << (out / "scatter.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault-aware training, stuck-at sweeps and replication frontiers for quantized CNNs"};
  app.require_subcommand(1);

  CommonFlags train_flags, sweep_flags, pareto_flags, report_flags;
  std::string checkpoint, mode, report_path;
  std::vector<std::string> reports;

  auto* train_cmd = app.add_subcommand("train", "train a network from a config");
  add_common(train_cmd, train_flags, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "exhaustive single stuck-at sweep of a checkpoint");
  add_common(sweep_cmd, sweep_flags, true);
  sweep_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  sweep_cmd->add_option("--mode", mode, "channel | pixel (overrides sweep_mode)");

  auto* pareto_cmd = app.add_subcommand("pareto", "replication cost vs worst-case error frontier");
  add_common(pareto_cmd, pareto_flags, false);
  pareto_cmd->add_option("--report", report_path, "channel sweep report JSON")->required();
  pareto_cmd->add_option("--checkpoint", checkpoint, "checkpoint the report was produced from")->required();

  auto* report_cmd = app.add_subcommand("report", "per-layer summary and scatter CSV for sweep reports");
  add_common(report_cmd, report_flags, false);
  report_cmd->add_option("reports", reports, "sweep report JSON files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(train_flags);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, checkpoint, mode);
    if (*pareto_cmd) return cmd_pareto(pareto_flags, report_path, checkpoint);
    if (*report_cmd) return cmd_report(report_flags, reports);
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", category_name(e.category()), e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 1;
  }
  return 0;
}
