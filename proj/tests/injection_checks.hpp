#pragma once

// Statistical and structural checks of the injection and dropout layers,
// shared by the unit tests and the acceptance binary.

#include "fatnet/injection.hpp"
#include "test_util.hpp"

namespace testutil {

// Empirical frequency of each codebook value over an element-model forward.
inline std::vector<double> injection_frequencies(double p_percent, int bits, std::size_t elements,
                                                 std::uint64_t seed) {
  InjectionConfig cfg;
  cfg.p_percent = p_percent;
  cfg.model = FaultModel::element;
  cfg.status = InjectionStatus::enable;
  cfg.codebook = make_codebook(bits);
  Rng rng(seed);
  const Tensor4 alpha({1, 1, 1, elements}, 0.5f);
  const InjectionResult res = inject_forward(alpha, cfg, rng);
  std::vector<double> freq(cfg.codebook.size(), 0.0);
  for (auto k : res.mask.value_index) {
    if (k >= 0) freq[static_cast<std::size_t>(k)] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(elements);
  return freq;
}

// Counts groups (a channel plane, or one pixel across channels) that are
// partially injected, carry more than one error value, or whose outputs do not
// match the mask.
inline std::size_t broadcast_violations(const InjectionResult& res, const Tensor4& alpha,
                                        const InjectionConfig& cfg) {
  const Shape4 s = alpha.shape();
  const auto& idx = res.mask.value_index;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const float expect = idx[i] >= 0 ? cfg.codebook[static_cast<std::size_t>(idx[i])] : alpha[i];
    if (res.output[i] != expect) ++bad;
  }
  const auto group = [&](auto&& indices) {
    const std::int8_t first = idx[indices(0)];
    for (std::size_t j = 1;; ++j) {
      const std::size_t at = indices(j);
      if (at == SIZE_MAX) break;
      if (idx[at] != first) return 1u;
    }
    return 0u;
  };
  for (std::size_t n = 0; n < s.n; ++n) {
    if (cfg.model == FaultModel::channel) {
      for (std::size_t c = 0; c < s.c; ++c) {
        const std::size_t base = alpha.index(n, c, 0, 0);
        bad += group([&](std::size_t j) { return j < s.plane() ? base + j : SIZE_MAX; });
      }
    } else if (cfg.model == FaultModel::pixel) {
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x)
          bad += group([&](std::size_t j) { return j < s.c ? alpha.index(n, j, y, x) : SIZE_MAX; });
    }
  }
  return bad;
}

inline std::size_t broadcast_trials(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t bad = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    InjectionConfig cfg;
    cfg.model = t % 2 ? FaultModel::pixel : FaultModel::channel;
    cfg.status = InjectionStatus::enable;
    cfg.p_percent = 5.0 + 90.0 * uniform01(rng);
    cfg.codebook = make_codebook(1 + static_cast<int>(uniform_index(rng, 4)));
    const Shape4 s{1 + uniform_index(rng, 4), 1 + uniform_index(rng, 8), 1 + uniform_index(rng, 8),
                   1 + uniform_index(rng, 8)};
    const Tensor4 alpha = random_tensor(s, rng);
    bad += broadcast_violations(inject_forward(alpha, cfg, rng), alpha, cfg);
  }
  return bad;
}

// Elementwise mismatches of inject_backward and dropout_backward against the
// mask oracle over random cases.
inline std::size_t backward_violations(std::size_t cases, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t bad = 0;
  for (std::size_t t = 0; t < cases; ++t) {
    const Shape4 s{1 + uniform_index(rng, 3), 1 + uniform_index(rng, 6), 1 + uniform_index(rng, 6),
                   1 + uniform_index(rng, 6)};
    const Tensor4 alpha = random_tensor(s, rng);
    const Tensor4 g = random_tensor(s, rng);

    InjectionConfig cfg;
    cfg.model = static_cast<FaultModel>(uniform_index(rng, 3));
    cfg.status = InjectionStatus::enable;
    cfg.p_percent = 100.0 * uniform01(rng);
    cfg.codebook = make_codebook(1 + static_cast<int>(uniform_index(rng, 4)));
    const InjectionResult inj = inject_forward(alpha, cfg, rng);
    const Tensor4 gi = inject_backward(g, inj.mask);
    for (std::size_t i = 0; i < g.size(); ++i) bad += gi[i] != (inj.mask.injected(i) ? 0.0f : g[i]);

    const double p = 0.9 * uniform01(rng);
    const DropoutResult dr = (t % 2) ? dropout2d_forward(alpha, p, rng) : dropout_forward(alpha, p, rng);
    const Tensor4 gd = dropout_backward(g, dr.mask, p);
    const float scale = static_cast<float>(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < g.size(); ++i) bad += gd[i] != (dr.mask.keep[i] ? g[i] * scale : 0.0f);
  }
  return bad;
}

}  // namespace testutil
