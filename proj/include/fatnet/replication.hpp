#pragma once

#include <optional>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "fatnet/evaluation.hpp"
#include "fatnet/network.hpp"

namespace fatnet {

// (site ordinal, channel)
using ChannelId = std::pair<std::size_t, std::size_t>;

struct ChannelCriticality {
  ChannelId channel;
  double worst_accuracy = 0.0;  // min over stuck values
  double worst_case_error() const { return 100.0 - worst_accuracy; }
};

// Most critical first: ascending worst accuracy, ties by (site, channel).
// Throws ConfigError for pixel-mode reports.
std::vector<ChannelCriticality> rank_channels(const SweepReport& report);

using ReplicationPlan = std::set<ChannelId>;

/// Per-channel hardware cost of a fully unrolled network, in LUT-equivalents:
/// (MACs producing the channel's output map) x weight bits x activation bits.
struct CostModel {
  struct Entry {
    ChannelId channel;
    double cost = 0.0;
  };
  std::vector<Entry> entries;      // every channel of every fault site
  double replication_factor = 3.0;  // TMR, voter folded in

  double baseline() const;
  double channel(const ChannelId& id) const;
};

// MACs x w x a for one output channel of a conv2d (k*k*C_in*H_out*W_out MACs,
// output size before pooling) or fully_connected (fan-in MACs) layer.
double channel_cost(const LayerSpec& spec, const Shape4& layer_output, int weight_bits, int act_bits);

// One entry per (site, channel) costed by the site's producing layer.
CostModel build_cost_model(const Network& net, double replication_factor = 3.0);

double plan_cost(const CostModel& model, const ReplicationPlan& plan);

// 100 - min(error-free accuracy, min accuracy over faults on unprotected
// channels). Replicated channels are masked by majority voting.
double worst_case_error(const SweepReport& report, const ReplicationPlan& plan);

struct FrontierPoint {
  std::size_t k = 0;
  std::uint64_t plan_hash = 0;  // FNV-1a of "site:channel;" over the ranked prefix
  double cost = 0.0;
  double worst_case_error = 0.0;
  bool dominated = false;
};

std::uint64_t plan_hash(const std::vector<ChannelId>& ordered_channels);

// One point per prefix of the criticality ranking, k = 0 .. all channels.
std::vector<FrontierPoint> pareto_frontier(const SweepReport& report, const CostModel& model);

// Marks points dominated by another point (<= in both, < in one).
void mark_dominated(std::vector<FrontierPoint>& points);

// Cheapest cost reaching worst-case error <= level, or nullopt.
std::optional<double> cost_for_error(const std::vector<FrontierPoint>& frontier, double level);

}  // namespace fatnet
