#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "fatnet/dataset.hpp"
#include "fatnet/evaluation.hpp"
#include "fatnet/training.hpp"

namespace fatnet {

// Environment variable naming the default dataset directory.
inline constexpr const char* kDataDirEnv = "FATNET_DATA_DIR";

/// Experiment configuration shared by every CLI command. File format: one
/// `key = value` per line, `#` starts a comment, unknown keys are rejected.
///
///   name               run label used as network id        (default: method)
///   method             sat | fat1 | fat2 | dropout2d-baseline
///   p                  injection / Dropout2D probability, percent
///   fault_model        element | channel | pixel            (channel)
///   epochs, batch_size, initial_lr, lr_halving_period, weight_decay
///   seed               global seed, fanned out to named sub-streams
///   topology           cnv-s | toy                          (cnv-s)
///   weight_bits, act_bits                                   (1, 1)
///   inject_fc          true | false                         (false)
///   epoch_eval_samples test samples scored each epoch       (1000)
///   dataset_format     idx | cifar-binary                   (idx)
///   data_dir           dataset directory ($FATNET_DATA_DIR if unset)
///   holdout            test split size for single-file IDX sets (1000)
///   train_limit        cap on training samples, 0 = all     (0)
///   sweep_mode         channel | pixel                      (channel)
///   subset_size        evaluation subset for sweeps         (1000)
///   out_dir            output directory                     (out)
///   workers            sweep threads, 0 = all cores         (0)
///   checkpoint_every   epochs between checkpoints, 0 = end only (0)
///   replication_factor cost multiplier of a replicated channel (3)
struct ExperimentConfig {
  std::string name;
  TrainConfig train;
  DatasetFormat dataset_format = DatasetFormat::idx;
  std::filesystem::path data_dir;
  std::size_t holdout = 1000;
  std::size_t train_limit = 0;
  SweepMode sweep_mode = SweepMode::channel;
  std::size_t subset_size = 1000;
  std::filesystem::path out_dir = "out";
  std::size_t workers = 0;
  std::size_t checkpoint_every = 0;
  double replication_factor = 3.0;

  std::set<std::string> keys_present;

  // Throws ConfigError naming the first missing key.
  void require(std::initializer_list<const char*> keys) const;
  std::string run_name() const { return name.empty() ? to_string(train.method) : name; }
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Sets one key; throws ConfigError for unknown keys or malformed values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Loads the configured dataset, applying train_limit.
DatasetHandle load_configured_dataset(const ExperimentConfig& cfg);

}  // namespace fatnet
