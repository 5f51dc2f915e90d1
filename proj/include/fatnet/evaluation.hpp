#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fatnet/dataset.hpp"
#include "fatnet/network.hpp"

namespace fatnet {

enum class SweepMode { channel, pixel };

std::string to_string(SweepMode m);
SweepMode parse_sweep_mode(const std::string& s);

/// One stuck-at fault at a fault site. `site` is the ordinal of the site in
/// Network::fault_sites() (0 = first). A channel fault clamps the whole
/// (channel) plane for every input; a pixel fault clamps (row, col) in every
/// channel.
struct FaultSpec {
  std::size_t site = 0;
  SweepMode target = SweepMode::channel;
  std::size_t channel = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  float value = 0.0f;

  // channel, or row * width + col for pixel faults
  std::size_t target_index(const Shape4& site_shape) const;
};

// Shape and error-value set of one fault site.
struct SiteInfo {
  std::size_t site = 0;
  std::size_t layer = 0;  // index in the network
  Shape4 shape;           // per-sample activation shape, n = 1
  std::vector<float> values;  // activation codebook = stuck values
};

std::vector<SiteInfo> describe_sites(const Network& net);

// Throws ConfigError when the fault does not address the network.
void validate_fault(const Network& net, const FaultSpec& fault);

// Overwrites the targeted activations of a batch (shape (b, c, h, w)) with the
// stuck value.
void apply_fault(Tensor4& activations, const FaultSpec& fault);

struct AccuracyCount {
  std::size_t correct = 0;
  std::size_t total = 0;
  double percent() const { return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total); }
};

// Index of the largest logit; first on ties.
std::size_t argmax_class(const Tensor4& logits, std::size_t sample);

// Top-1 accuracy in evaluation mode, optionally with one stuck-at fault.
AccuracyCount count_correct(const Network& net, const Dataset& data,
                            const std::optional<FaultSpec>& fault = std::nullopt,
                            std::size_t batch_size = 250);
double accuracy(const Network& net, const Dataset& data,
                const std::optional<FaultSpec>& fault = std::nullopt);

struct SweepEntry {
  FaultSpec fault;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct LayerExtremes {
  std::size_t site = 0;
  float value = 0.0f;
  std::size_t targets = 0;
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;
};

/// Result of an exhaustive single-fault sweep.
struct SweepReport {
  static constexpr int kSchemaVersion = 1;

  SweepMode mode = SweepMode::channel;
  std::string network_id;
  std::string dataset;
  std::size_t eval_samples = 0;
  std::size_t error_free_correct = 0;
  double error_free = 0.0;
  std::vector<SiteInfo> sites;
  std::vector<SweepEntry> entries;  // ordered: value, site, target (nested as listed)
  std::vector<LayerExtremes> extremes;
  double variance = 0.0;  // population variance of all entry accuracies
  // Run metadata; excluded from the CSV outputs.
  double wall_seconds = 0.0;
  std::size_t workers = 1;

  double min_accuracy() const;
  double max_accuracy() const;
};

struct SweepOptions {
  std::size_t workers = 1;  // 0 = all available threads
  std::size_t batch_size = 250;
  std::string dataset_name;
};

// Exhaustive sweep: for every error value, every fault site, every target.
SweepReport sweep(const Network& net, const Dataset& data, SweepMode mode,
                  const SweepOptions& opts = {});
inline SweepReport sweep_channels(const Network& net, const Dataset& data, const SweepOptions& opts = {}) {
  return sweep(net, data, SweepMode::channel, opts);
}
inline SweepReport sweep_pixels(const Network& net, const Dataset& data, const SweepOptions& opts = {}) {
  return sweep(net, data, SweepMode::pixel, opts);
}

// Sum over sites of (channels or pixels) x |codebook|.
std::size_t expected_configurations(const Network& net, SweepMode mode);

// Recomputes per-(site, value) extremes and the global variance from entries.
void finalize_report(SweepReport& report);

double population_variance(const std::vector<double>& xs);

// Table-style summary row: one per site, extremes for every stuck value.
struct SummaryRow {
  std::size_t site = 0;
  std::size_t targets = 0;
  std::vector<float> values;
  std::vector<double> min_accuracy;
  std::vector<double> max_accuracy;
};

struct ScatterPoint {
  std::string network;
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;
  double error_free = 0.0;
};

struct ReportSummary {
  std::vector<SummaryRow> rows;  // sites without entries are omitted
  ScatterPoint scatter;
};

ReportSummary summarize(const SweepReport& report);

}  // namespace fatnet
