#include "fatnet/config.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "fatnet/errors.hpp"
#include "fatnet/report_io.hpp"

namespace fatnet {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long x = std::stoull(v, &pos);
    if (pos == v.size()) return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + v + "'");
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  try {
    const double x = std::stod(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "' expects true or false, got '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"name", [](auto& c, auto&, auto& v) { c.name = v; }},
      {"method", [](auto& c, auto&, auto& v) { c.train.method = parse_train_method(v); }},
      {"p", [](auto& c, auto& k, auto& v) { c.train.p_percent = to_double(k, v); }},
      {"fault_model", [](auto& c, auto&, auto& v) { c.train.fault_model = parse_fault_model(v); }},
      {"epochs", [](auto& c, auto& k, auto& v) { c.train.epochs = to_size(k, v); }},
      {"batch_size", [](auto& c, auto& k, auto& v) { c.train.batch_size = to_size(k, v); }},
      {"initial_lr", [](auto& c, auto& k, auto& v) { c.train.initial_lr = to_double(k, v); }},
      {"lr_halving_period", [](auto& c, auto& k, auto& v) { c.train.lr_halving_period = to_size(k, v); }},
      {"weight_decay", [](auto& c, auto& k, auto& v) { c.train.weight_decay = to_double(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.train.seed = to_size(k, v); }},
      {"topology", [](auto& c, auto&, auto& v) { c.train.topology = v; }},
      {"weight_bits", [](auto& c, auto& k, auto& v) { c.train.weight_bits = static_cast<int>(to_size(k, v)); }},
      {"act_bits", [](auto& c, auto& k, auto& v) { c.train.act_bits = static_cast<int>(to_size(k, v)); }},
      {"inject_fc", [](auto& c, auto& k, auto& v) { c.train.inject_fc = to_bool(k, v); }},
      {"epoch_eval_samples", [](auto& c, auto& k, auto& v) { c.train.epoch_eval_samples = to_size(k, v); }},
      {"dataset_format", [](auto& c, auto&, auto& v) { c.dataset_format = parse_dataset_format(v); }},
      {"data_dir", [](auto& c, auto&, auto& v) { c.data_dir = v; }},
      {"holdout", [](auto& c, auto& k, auto& v) { c.holdout = to_size(k, v); }},
      {"train_limit", [](auto& c, auto& k, auto& v) { c.train_limit = to_size(k, v); }},
      {"sweep_mode", [](auto& c, auto&, auto& v) { c.sweep_mode = parse_sweep_mode(v); }},
      {"subset_size", [](auto& c, auto& k, auto& v) { c.subset_size = to_size(k, v); }},
      {"out_dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
      {"workers", [](auto& c, auto& k, auto& v) { c.workers = to_size(k, v); }},
      {"checkpoint_every", [](auto& c, auto& k, auto& v) { c.checkpoint_every = to_size(k, v); }},
      {"replication_factor", [](auto& c, auto& k, auto& v) { c.replication_factor = to_double(k, v); }},
  };
  return table;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
  cfg.keys_present.insert(key);
}

void ExperimentConfig::require(std::initializer_list<const char*> keys) const {
  for (const char* k : keys) {
    if (!keys_present.contains(k)) throw ConfigError(std::string("missing config key: ") + k);
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (cfg.keys_present.contains(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    set_config_value(cfg, key, trim(std::string_view(t).substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

DatasetHandle load_configured_dataset(const ExperimentConfig& cfg) {
  std::filesystem::path dir = cfg.data_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv(kDataDirEnv)) dir = env;
  }
  if (dir.empty()) throw ConfigError(std::string("missing config key: data_dir (or set ") + kDataDirEnv + ")");
  DatasetHandle h = load_dataset(dir, cfg.dataset_format, LoadOptions{cfg.holdout, cfg.train.seed});
  if (cfg.train_limit != 0 && cfg.train_limit < h.train.size()) {
    h.train = h.train.random_subset(cfg.train_limit, cfg.train.seed, "train-limit");
  }
  return h;
}

}  // namespace fatnet
