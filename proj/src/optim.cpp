#include "fatnet/optim.hpp"

#include <cmath>

#include "fatnet/errors.hpp"

namespace fatnet {

LossResult squared_hinge_loss(const Tensor4& logits, std::span<const std::uint8_t> labels) {
  const std::size_t b = logits.shape().n;
  const std::size_t classes = logits.shape().sample();
  if (labels.size() != b) throw ConfigError("squared_hinge_loss: label count does not match batch");
  LossResult res{0.0, Tensor4(logits.shape())};
  if (b == 0) return res;
  double total = 0.0;
  for (std::size_t s = 0; s < b; ++s) {
    if (labels[s] >= classes) throw ConfigError("squared_hinge_loss: label out of range");
    for (std::size_t k = 0; k < classes; ++k) {
      const double y = k == labels[s] ? 1.0 : -1.0;
      const double margin = 1.0 - y * logits[s * classes + k];
      if (margin > 0.0) {
        total += margin * margin;
        res.grad[s * classes + k] = static_cast<float>(-2.0 * y * margin / static_cast<double>(b));
      }
    }
  }
  res.loss = total / static_cast<double>(b);
  return res;
}

void Adam::step(std::span<Parameter* const> params) {
  if (m_.empty()) {
    for (Parameter* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ConfigError("Adam: parameter list changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    auto w = p.value.values();
    const auto g = p.value.ensure_grad();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + hyper_.weight_decay * w[i];
      m[i] = hyper_.beta1 * m[i] + (1.0 - hyper_.beta1) * gi;
      v[i] = hyper_.beta2 * v[i] + (1.0 - hyper_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] = static_cast<float>(w[i] - hyper_.lr * mhat / (std::sqrt(vhat) + hyper_.eps));
    }
  }
}

}  // namespace fatnet
