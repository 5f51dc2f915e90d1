#include "fatnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fatnet/errors.hpp"
#include "fatnet/evaluation.hpp"
#include "fatnet/optim.hpp"
#include "fatnet/topology.hpp"

namespace fatnet {

std::string to_string(TrainMethod m) {
  switch (m) {
    case TrainMethod::sat: return "sat";
    case TrainMethod::fat1: return "fat1";
    case TrainMethod::fat2: return "fat2";
    case TrainMethod::dropout2d: return "dropout2d-baseline";
  }
  return "?";
}

TrainMethod parse_train_method(const std::string& s) {
  if (s == "sat") return TrainMethod::sat;
  if (s == "fat1") return TrainMethod::fat1;
  if (s == "fat2") return TrainMethod::fat2;
  if (s == "dropout2d-baseline" || s == "dropout2d") return TrainMethod::dropout2d;
  throw ConfigError("unknown training method '" + s + "' (expected sat, fat1, fat2, dropout2d-baseline)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (lr_halving_period < 1) throw ConfigError("lr_halving_period must be >= 1");
  if (!(initial_lr > 0.0)) throw ConfigError("initial_lr must be > 0");
  if (method != TrainMethod::sat) {
    if (!p_percent) throw ConfigError("missing key: p (required for " + to_string(method) + ")");
    const double p = *p_percent;
    if (method == TrainMethod::dropout2d) {
      if (!(p >= 0.0 && p < 100.0)) throw ConfigError("p must be a percentage in [0, 100)");
    } else if (!(p >= 0.0 && p <= 100.0)) {
      throw ConfigError("p must be a percentage in [0, 100]");
    }
  }
}

std::size_t EpochPlan::enabled_count() const {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), InjectionStatus::enable));
}

std::string EpochPlan::label() const {
  if (chosen) return std::to_string(*chosen);
  return enabled_count() == 0 ? "none" : "all";
}

double lr_schedule(std::size_t epoch, const TrainConfig& cfg) {
  return std::ldexp(cfg.initial_lr, -static_cast<int>(epoch / cfg.lr_halving_period));
}

std::size_t select_epoch_layer(std::size_t /*epoch*/, std::size_t n_layers, Rng& rng) {
  if (n_layers == 0) throw ConfigError("fat2 needs at least one injection layer");
  return static_cast<std::size_t>(uniform_index(rng, n_layers));
}

EpochPlan plan_epoch(std::size_t epoch, std::size_t n_sites, TrainMethod method, Rng& rng) {
  EpochPlan plan{epoch, std::vector<InjectionStatus>(n_sites, InjectionStatus::disable), std::nullopt};
  switch (method) {
    case TrainMethod::sat: break;
    case TrainMethod::fat1:
    case TrainMethod::dropout2d:
      std::fill(plan.status.begin(), plan.status.end(), InjectionStatus::enable);
      break;
    case TrainMethod::fat2: {
      const std::size_t k = select_epoch_layer(epoch, n_sites, rng);
      plan.status[k] = InjectionStatus::enable;
      plan.chosen = k;
      break;
    }
  }
  return plan;
}

Network prepare_network(const TrainConfig& cfg, const Shape4& input, std::size_t classes) {
  cfg.validate();
  TopologyOptions opts;
  opts.id = cfg.topology;
  opts.input = input;
  opts.classes = classes;
  opts.weight_bits = cfg.weight_bits;
  opts.act_bits = cfg.act_bits;
  opts.fault_model = cfg.fault_model;
  opts.p_percent = cfg.method == TrainMethod::dropout2d ? 0.0 : cfg.p_or_zero();
  opts.inject_fc = cfg.inject_fc;
  opts.init_seed = cfg.seed;
  Network built = build_topology(opts);

  Rng seeds = substream(cfg.seed, "injection-values");
  if (cfg.method != TrainMethod::dropout2d) {
    for (InjectionLayer* inj : built.injection_layers()) inj->reseed(seeds());
    return built;
  }
  Network net(built.input_shape(), built.classes(), built.id());
  for (std::size_t i = 0; i < built.size(); ++i) {
    if (built.layer(i).kind() == LayerKind::injection) {
      net.emplace<DropoutLayer>(cfg.p_or_zero() / 100.0, true, seeds());
    } else {
      net.add(built.layer(i).clone());
    }
  }
  return net;
}

void apply_plan(Network& net, const EpochPlan& plan) {
  const auto sites = net.fault_sites();
  if (sites.size() != plan.status.size()) throw ConfigError("epoch plan does not match the network's fault sites");
  for (std::size_t s = 0; s < sites.size(); ++s) {
    const bool on = plan.status[s] == InjectionStatus::enable;
    Layer& l = net.layer(sites[s]);
    if (auto* inj = dynamic_cast<InjectionLayer*>(&l)) {
      inj->set_status(plan.status[s]);
    } else if (auto* drop = dynamic_cast<DropoutLayer*>(&l)) {
      drop->set_enabled(on);
    }
  }
}

double train_step(Network& net, Adam& opt, const Tensor4& images, std::span<const std::uint8_t> labels) {
  net.zero_grad();
  const Tensor4 logits = net.forward(images);
  LossResult loss = squared_hinge_loss(logits, labels);
  net.backward(loss.grad);
  auto params = net.parameters();
  opt.step(params);
  net.after_update();
  return loss.loss;
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  const EpochCallback& on_epoch) {
  return train_network(prepare_network(cfg, train_set.sample_shape(), train_set.classes), cfg, train_set,
                       test_set, on_epoch);
}

TrainResult train_network(Network net, const TrainConfig& cfg, const Dataset& train_set,
                          const Dataset& test_set, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.size() == 0) throw ConfigError("empty training set");
  TrainResult result;
  Rng shuffle_rng = substream(cfg.seed, "batch-shuffle");
  Rng layer_rng = substream(cfg.seed, "fat2-layer-choice");
  const Dataset eval_set = test_set.random_subset(cfg.epoch_eval_samples, cfg.seed, "eval-subset");
  Adam opt(AdamHyper{.lr = cfg.initial_lr, .weight_decay = cfg.weight_decay});

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n_sites = net.fault_sites().size();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochPlan plan = plan_epoch(epoch, n_sites, cfg.method, layer_rng);
    apply_plan(net, plan);
    opt.set_lr(lr_schedule(epoch, cfg));
    shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - begin);
      // Batch-norm statistics need at least two samples.
      if (count < 2 && steps > 0) break;
      const std::span<const std::size_t> idx(order.data() + begin, count);
      const double loss = train_step(net, opt, train_set.gather_images(idx), train_set.gather_labels(idx));
      if (!std::isfinite(loss)) {
        throw DivergenceError("loss became " + std::to_string(loss) + " at epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(steps));
      }
      loss_sum += loss;
      ++steps;
    }
    // Evaluation sees every fault site transparent.
    EpochLog entry{epoch, loss_sum / static_cast<double>(steps), accuracy(net, eval_set), opt.lr(),
                   plan.label(), steps};
    result.log.push_back(entry);
    result.plans.push_back(std::move(plan));
    if (on_epoch) on_epoch(entry, net);
  }
  result.network = std::move(net);
  return result;
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "epoch,loss,test_acc,lr,enabled_layer,steps\n";
  char buf[256];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.2f,%.8g,%s,%zu\n", e.epoch, e.loss, e.test_accuracy, e.lr,
                  e.enabled_layer.c_str(), e.steps);
    f << buf;
  }
}

std::vector<EpochLog> read_training_log(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(f, line);
  if (line != "epoch,loss,test_acc,lr,enabled_layer,steps") {
    throw FormatError("unexpected training log header '" + line + "'", 0);
  }
  std::vector<EpochLog> out;
  std::size_t offset = line.size() + 1;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> cols;
    while (std::getline(ss, field, ',')) cols.push_back(field);
    if (cols.size() != 6) throw FormatError("training log row needs 6 columns", offset);
    try {
      out.push_back({std::stoul(cols[0]), std::stod(cols[1]), std::stod(cols[2]), std::stod(cols[3]), cols[4],
                     std::stoul(cols[5])});
    } catch (const std::exception&) {
      throw FormatError("bad number in training log row", offset);
    }
    offset += line.size() + 1;
  }
  return out;
}

}  // namespace fatnet
