#pragma once

// Central finite-difference checks of every differentiable op, shared by the
// unit tests and the acceptance binary. Each returns the worst relative error.

#include <map>
#include <string>

#include "fatnet/layers.hpp"
#include "fatnet/optim.hpp"
#include "test_util.hpp"

namespace testutil {

// Checks d/dx and d/dparams of sum(G * layer(x)). `reset` runs before every
// forward so stochastic layers replay the same draws.
inline double layer_gradcheck(Layer& layer, Tensor4 x, Rng& rng, double h,
                              const std::function<void()>& reset = {}) {
  const auto run = [&] {
    if (reset) reset();
    return layer.forward(x);
  };
  const Tensor4 g = random_tensor(run().shape(), rng);
  for (Parameter* p : layer.parameters()) p->value.zero_grad();
  run();
  const Tensor4 gx = layer.backward(g, true);

  const auto f = [&] { return dot(run(), g); };
  double worst = max_rel_error(to_double(gx.values()), numeric_grad(x, f, h));
  for (Parameter* p : layer.parameters()) {
    const auto analytic = to_double(p->value.grad());
    worst = std::max(worst, max_rel_error(analytic, numeric_grad(p->value, f, h)));
  }
  return worst;
}

inline double loss_gradcheck(Rng& rng) {
  Tensor4 logits = random_tensor({6, 10, 1, 1}, rng, -2.0f, 2.0f);
  std::vector<std::uint8_t> labels(6);
  for (auto& l : labels) l = static_cast<std::uint8_t>(uniform_index(rng, 10));
  const LossResult r = squared_hinge_loss(logits, labels);
  const auto f = [&] { return squared_hinge_loss(logits, labels).loss; };
  return max_rel_error(to_double(r.grad.values()), numeric_grad(logits, f, 1e-4));
}

// Distinct values spaced 0.05 apart so max-pool windows have no near-ties.
inline Tensor4 spaced_tensor(Shape4 s, Rng& rng) {
  std::vector<float> v(s.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.05f * static_cast<float>(i);
  shuffle(v.begin(), v.end(), rng);
  return Tensor4(s, std::move(v));
}

// Name -> worst relative error for every differentiable op.
inline std::map<std::string, double> all_gradchecks(std::uint64_t seed) {
  Rng rng(seed);
  std::map<std::string, double> out;

  Conv2dLayer conv(3, 4, 3, 1, kFloatBits);
  conv.weights().value = random_tensor(conv.weights().value.shape(), rng);
  out["conv2d"] = layer_gradcheck(conv, random_tensor({2, 3, 6, 6}, rng), rng, 0x1p-1);

  FullyConnectedLayer fc(12, 5, kFloatBits);
  fc.weights().value = random_tensor(fc.weights().value.shape(), rng);
  out["fully_connected"] = layer_gradcheck(fc, random_tensor({3, 3, 2, 2}, rng), rng, 0x1p-1);

  BatchNormLayer bn(3);
  bn.gamma().value = random_tensor(bn.gamma().value.shape(), rng, 0.5f, 1.5f);
  bn.beta().value = random_tensor(bn.beta().value.shape(), rng);
  out["batch_norm"] = layer_gradcheck(bn, random_tensor({4, 3, 3, 3}, rng, -2.0f, 2.0f), rng, 0x1p-3);

  MaxPoolLayer pool;
  out["max_pool2d"] = layer_gradcheck(pool, spaced_tensor({2, 2, 4, 4}, rng), rng, 0x1p-8);

  // Quantizer: the straight-through estimator is the derivative of the
  // clip(x, -1, 1) surrogate, checked away from the clip kinks.
  {
    Tensor4 pre = random_tensor({2, 2, 3, 3}, rng, -0.9f, 0.9f);
    for (std::size_t i = 0; i < pre.size(); i += 3) pre[i] = (i % 2 ? 1.5f : -1.5f);
    const Tensor4 g = random_tensor(pre.shape(), rng);
    const auto f = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < pre.size(); ++i) s += std::clamp(double(pre[i]), -1.0, 1.0) * g[i];
      return s;
    };
    out["quant_act_ste"] =
        max_rel_error(to_double(quantize_backward(g, pre).values()), numeric_grad(pre, f, 0x1p-8));
  }

  for (FaultModel m : {FaultModel::element, FaultModel::channel, FaultModel::pixel}) {
    InjectionConfig cfg;
    cfg.p_percent = 30.0;
    cfg.model = m;
    cfg.status = InjectionStatus::enable;
    cfg.codebook = make_codebook(2);
    InjectionLayer inj(cfg);
    out["injection_" + to_string(m)] = layer_gradcheck(
        inj, random_tensor({2, 3, 3, 3}, rng), rng, 0x1p-6, [&] { inj.reseed(99); });
  }
  for (bool per_channel : {false, true}) {
    DropoutLayer drop(0.3, per_channel);
    out[per_channel ? "dropout2d" : "dropout"] = layer_gradcheck(
        drop, random_tensor({2, 3, 3, 3}, rng), rng, 0x1p-6, [&] { drop.reseed(5); });
  }
  out["squared_hinge"] = loss_gradcheck(rng);
  return out;
}

}  // namespace testutil
