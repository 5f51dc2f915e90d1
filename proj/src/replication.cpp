#include "fatnet/replication.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "fatnet/errors.hpp"

namespace fatnet {

std::vector<ChannelCriticality> rank_channels(const SweepReport& report) {
  if (report.mode != SweepMode::channel) {
    throw ConfigError("rank_channels needs a channel-sweep report, got a " + to_string(report.mode) +
                      " sweep");
  }
  std::map<ChannelId, double> worst;
  for (const SweepEntry& e : report.entries) {
    const ChannelId id{e.fault.site, e.fault.channel};
    auto [it, inserted] = worst.emplace(id, e.accuracy);
    if (!inserted) it->second = std::min(it->second, e.accuracy);
  }
  std::vector<ChannelCriticality> out;
  out.reserve(worst.size());
  for (const auto& [id, acc] : worst) out.push_back({id, acc});
  // map order already gives the (site, channel) tie-break
  std::stable_sort(out.begin(), out.end(), [](const ChannelCriticality& a, const ChannelCriticality& b) {
    return a.worst_accuracy < b.worst_accuracy;
  });
  return out;
}

double CostModel::baseline() const {
  double total = 0.0;
  for (const Entry& e : entries) total += e.cost;
  return total;
}

double CostModel::channel(const ChannelId& id) const {
  for (const Entry& e : entries) {
    if (e.channel == id) return e.cost;
  }
  throw ConfigError("cost model has no channel (" + std::to_string(id.first) + ", " +
                    std::to_string(id.second) + ")");
}

double channel_cost(const LayerSpec& spec, const Shape4& out, int weight_bits, int act_bits) {
  double macs = 0.0;
  if (spec.kind == LayerKind::conv2d) {
    macs = static_cast<double>(spec.kernel * spec.kernel * spec.in_channels * out.h * out.w);
  } else if (spec.kind == LayerKind::fully_connected) {
    macs = static_cast<double>(spec.in_channels);
  } else {
    throw ConfigError("channel_cost: " + to_string(spec.kind) + " has no MAC array");
  }
  return macs * weight_bits * act_bits;
}

CostModel build_cost_model(const Network& net, double replication_factor) {
  CostModel model;
  model.replication_factor = replication_factor;
  for (const SiteInfo& s : describe_sites(net)) {
    const std::size_t producer = net.producing_layer(s.layer);
    const LayerSpec spec = net.layer(producer).spec();
    int act_bits = kFloatBits;
    for (std::size_t i = producer; i <= s.layer; ++i) {
      if (net.layer(i).kind() == LayerKind::quant_act) act_bits = net.layer(i).spec().act_bits;
    }
    const double cost = channel_cost(spec, net.output_shape(producer), spec.weight_bits, act_bits);
    for (std::size_t c = 0; c < s.shape.c; ++c) model.entries.push_back({{s.site, c}, cost});
  }
  return model;
}

double plan_cost(const CostModel& model, const ReplicationPlan& plan) {
  double total = 0.0;
  std::size_t matched = 0;
  for (const auto& e : model.entries) {
    const bool replicated = plan.contains(e.channel);
    matched += replicated;
    total += e.cost * (replicated ? model.replication_factor : 1.0);
  }
  if (matched != plan.size()) throw ConfigError("replication plan names channels outside the cost model");
  return total;
}

double worst_case_error(const SweepReport& report, const ReplicationPlan& plan) {
  double worst = report.error_free;
  for (const SweepEntry& e : report.entries) {
    if (!plan.contains({e.fault.site, e.fault.channel})) worst = std::min(worst, e.accuracy);
  }
  return 100.0 - worst;
}

std::uint64_t plan_hash(const std::vector<ChannelId>& channels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [site, ch] : channels) {
    for (char c : std::to_string(site) + ":" + std::to_string(ch) + ";") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::vector<FrontierPoint> pareto_frontier(const SweepReport& report, const CostModel& model) {
  const auto ranking = rank_channels(report);
  std::vector<FrontierPoint> points;
  points.reserve(ranking.size() + 1);

  // Remaining minimum after removing the first k ranked channels: suffix minima
  // over each channel's worst accuracy.
  std::vector<double> suffix_min(ranking.size() + 1, report.error_free);
  for (std::size_t i = ranking.size(); i-- > 0;) {
    suffix_min[i] = std::min(suffix_min[i + 1], ranking[i].worst_accuracy);
  }
  std::map<ChannelId, double> cost_of;
  for (const auto& e : model.entries) cost_of[e.channel] = e.cost;

  double cost = model.baseline();
  std::vector<ChannelId> prefix;
  for (std::size_t k = 0; k <= ranking.size(); ++k) {
    if (k > 0) {
      const ChannelId id = ranking[k - 1].channel;
      const auto it = cost_of.find(id);
      if (it == cost_of.end()) throw ConfigError("report channel missing from the cost model");
      cost += it->second * (model.replication_factor - 1.0);
      prefix.push_back(id);
    }
    points.push_back({k, plan_hash(prefix), cost, 100.0 - suffix_min[k], false});
  }
  mark_dominated(points);
  return points;
}

void mark_dominated(std::vector<FrontierPoint>& points) {
  for (auto& p : points) {
    p.dominated = std::any_of(points.begin(), points.end(), [&](const FrontierPoint& q) {
      return q.cost <= p.cost && q.worst_case_error <= p.worst_case_error &&
             (q.cost < p.cost || q.worst_case_error < p.worst_case_error);
    });
  }
}

std::optional<double> cost_for_error(const std::vector<FrontierPoint>& frontier, double level) {
  std::optional<double> best;
  for (const auto& p : frontier) {
    if (p.worst_case_error <= level && (!best || p.cost < *best)) best = p.cost;
  }
  return best;
}

}  // namespace fatnet
