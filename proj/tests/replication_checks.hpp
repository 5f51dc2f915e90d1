#pragma once

// Property checks of the replication planner on small reports, shared by the
// unit tests and the acceptance binary.

#include <string>
#include <vector>

#include "fatnet/replication.hpp"
#include "test_util.hpp"

namespace testutil {

// Channel report with random per-configuration accuracies; `sites` lists the
// channel count per site, E = 2.
inline SweepReport random_channel_report(const std::vector<std::size_t>& sites, Rng& rng) {
  SweepReport r;
  r.mode = SweepMode::channel;
  r.error_free = 80.0 + 0.5 * static_cast<double>(uniform_index(rng, 30));
  for (std::size_t s = 0; s < sites.size(); ++s) r.sites.push_back({s, 2 * s + 1, {1, sites[s], 2, 2}, {-1.0f, 1.0f}});
  for (float v : {-1.0f, 1.0f})
    for (std::size_t s = 0; s < sites.size(); ++s)
      for (std::size_t c = 0; c < sites[s]; ++c) {
        // Coarse grid so ties between channels occur.
        const double acc = 0.5 * static_cast<double>(uniform_index(rng, 160));
        r.entries.push_back({{.site = s, .target = SweepMode::channel, .channel = c, .value = v}, 0, acc});
      }
  finalize_report(r);
  return r;
}

inline CostModel random_cost_model(const SweepReport& r, Rng& rng) {
  CostModel m;
  for (const SiteInfo& s : r.sites)
    for (std::size_t c = 0; c < s.shape.c; ++c) m.entries.push_back({{s.site, c}, 1.0 + double(uniform_index(rng, 50))});
  return m;
}

// Returns a description of every violated property (empty = all hold).
inline std::vector<std::string> replication_violations(const SweepReport& r, const CostModel& m) {
  std::vector<std::string> bad;
  const auto ranking = rank_channels(r);
  const std::size_t n = ranking.size();
  const auto frontier = pareto_frontier(r, m);

  // Greedy prefix vs. every k-subset.
  for (std::size_t k = 0; k <= std::min<std::size_t>(4, n); ++k) {
    ReplicationPlan greedy;
    for (std::size_t i = 0; i < k; ++i) greedy.insert(ranking[i].channel);
    double best = 1e9;
    std::vector<std::size_t> pick(k);
    const auto rec = [&](auto&& self, std::size_t depth, std::size_t from) -> void {
      if (depth == k) {
        ReplicationPlan p;
        for (std::size_t i : pick) p.insert(ranking[i].channel);
        best = std::min(best, worst_case_error(r, p));
        return;
      }
      for (std::size_t i = from; i < n; ++i) {
        pick[depth] = i;
        self(self, depth + 1, i + 1);
      }
    };
    rec(rec, 0, 0);
    if (worst_case_error(r, greedy) != best) bad.push_back("greedy prefix not optimal at k=" + std::to_string(k));
    if (frontier[k].worst_case_error != best) bad.push_back("frontier error differs at k=" + std::to_string(k));
  }

  ReplicationPlan plan;
  double prev_err = worst_case_error(r, plan), prev_cost = plan_cost(m, plan);
  for (std::size_t k = 1; k <= n; ++k) {
    plan.insert(ranking[k - 1].channel);
    const double err = worst_case_error(r, plan), cost = plan_cost(m, plan);
    if (err > prev_err) bad.push_back("worst-case error increased at k=" + std::to_string(k));
    if (!(cost > prev_cost)) bad.push_back("cost not strictly increasing at k=" + std::to_string(k));
    if (frontier[k].cost != cost || frontier[k].worst_case_error != err) {
      bad.push_back("frontier point differs from plan at k=" + std::to_string(k));
    }
    prev_err = err;
    prev_cost = cost;
  }

  if (frontier.size() != n + 1) bad.push_back("frontier size");
  if (frontier.front().cost != m.baseline() || frontier.front().worst_case_error != 100.0 - r.min_accuracy()) {
    bad.push_back("k=0 endpoint");
  }
  const double full = m.replication_factor * m.baseline();
  if (std::abs(frontier.back().cost - full) > 1e-9 * full ||
      frontier.back().worst_case_error != 100.0 - r.error_free) {
    bad.push_back("k=all endpoint");
  }
  return bad;
}

}  // namespace testutil
