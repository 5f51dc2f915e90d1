#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fatnet/layers.hpp"
#include "fatnet/tensor.hpp"

namespace fatnet {

struct LossResult {
  double loss = 0.0;
  Tensor4 grad;  // dL/dlogits, same shape as logits
};

// Mean over the batch of sum_k max(0, 1 - y_k * logit_k)^2 with one-vs-rest
// targets y_k in {-1, +1}. logits: (b, classes, 1, 1).
LossResult squared_hinge_loss(const Tensor4& logits, std::span<const std::uint8_t> labels);

struct AdamHyper {
  double lr = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 added to the gradient
};

/// ADAM with bias correction. State is keyed by the order of the parameter
/// list passed to step(), which must stay the same between calls.
class Adam {
 public:
  explicit Adam(AdamHyper hyper = {}) : hyper_(hyper) {}

  void set_lr(double lr) { hyper_.lr = lr; }
  double lr() const { return hyper_.lr; }
  std::uint64_t steps() const { return t_; }

  void step(std::span<Parameter* const> params);

 private:
  AdamHyper hyper_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace fatnet
