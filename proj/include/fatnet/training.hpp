#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fatnet/dataset.hpp"
#include "fatnet/injection.hpp"
#include "fatnet/network.hpp"
#include "fatnet/rng.hpp"

namespace fatnet {

// sat: no injection. fat1: every injection layer enabled with fixed p.
// fat2: one randomly chosen injection layer enabled per epoch.
// dropout2d: fat1 with each injection layer replaced by Dropout2D(p / 100).
enum class TrainMethod { sat, fat1, fat2, dropout2d };

std::string to_string(TrainMethod m);
TrainMethod parse_train_method(const std::string& s);

struct TrainConfig {
  TrainMethod method = TrainMethod::sat;
  std::optional<double> p_percent;  // required unless method == sat
  FaultModel fault_model = FaultModel::channel;
  std::size_t epochs = 30;
  std::size_t batch_size = 100;
  double initial_lr = 0.02;
  std::size_t lr_halving_period = 40;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  std::string topology = "cnv-s";
  int weight_bits = 1;
  int act_bits = 1;
  bool inject_fc = false;
  // Test samples scored after every epoch (0 = whole test set).
  std::size_t epoch_eval_samples = 1000;

  void validate() const;
  double p_or_zero() const { return p_percent.value_or(0.0); }
};

struct EpochPlan {
  std::size_t epoch = 0;
  std::vector<InjectionStatus> status;  // one per fault-site layer
  std::optional<std::size_t> chosen;    // fat2 only

  std::size_t enabled_count() const;
  // "none", "all" or the chosen index
  std::string label() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double test_accuracy = 0.0;
  double lr = 0.0;
  std::string enabled_layer;
  std::size_t steps = 0;
};

struct TrainResult {
  Network network;
  std::vector<EpochLog> log;
  std::vector<EpochPlan> plans;
};

// lr = initial_lr * 2^-floor(epoch / period)
double lr_schedule(std::size_t epoch, const TrainConfig& cfg);

// Uniform over [0, n).
std::size_t select_epoch_layer(std::size_t epoch, std::size_t n_layers, Rng& rng);

// Statuses for one epoch; draws from rng only for fat2.
EpochPlan plan_epoch(std::size_t epoch, std::size_t n_sites, TrainMethod method, Rng& rng);

// Builds the topology for the config (injection layers configured and seeded,
// or replaced by Dropout2D for the baseline).
Network prepare_network(const TrainConfig& cfg, const Shape4& input, std::size_t classes);

// Applies an epoch plan to the network's fault-site layers.
void apply_plan(Network& net, const EpochPlan& plan);

// One optimizer step on a batch; returns the loss.
class Adam;
double train_step(Network& net, Adam& opt, const Tensor4& images, std::span<const std::uint8_t> labels);

using EpochCallback = std::function<void(const EpochLog&, const Network&)>;

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  const EpochCallback& on_epoch = {});
// Trains an already-built network (used to compare topologies directly).
TrainResult train_network(Network net, const TrainConfig& cfg, const Dataset& train_set,
                          const Dataset& test_set, const EpochCallback& on_epoch = {});

// CSV with header epoch,loss,test_acc,lr,enabled_layer,steps
void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);
std::vector<EpochLog> read_training_log(const std::filesystem::path& path);

}  // namespace fatnet
