#include "fatnet/quantization.hpp"

#include <cmath>

#include "fatnet/errors.hpp"

namespace fatnet {

bool is_supported_bitwidth(int bits) {
  return (bits >= 1 && bits <= 4) || bits == kFloatBits;
}

QuantCodebook make_codebook(int bits) {
  if (bits < 1 || bits > 4) {
    throw ConfigError("unsupported quantization bit width " + std::to_string(bits) +
                      " (expected 1..4)");
  }
  QuantCodebook cb;
  cb.bits_ = bits;
  if (bits == 1) {
    cb.values_ = {-1.0f, 1.0f};
    return cb;
  }
  const int levels = (1 << bits) - 1;
  const int half = levels / 2;
  // k / half keeps the grid exactly symmetric in float.
  for (int k = -half; k <= half; ++k) {
    cb.values_.push_back(static_cast<float>(static_cast<double>(k) / half));
  }
  return cb;
}

QuantCodebook QuantCodebook::from_values(int bits, std::vector<float> values) {
  QuantCodebook cb = make_codebook(bits);
  if (cb.values_ != values) {
    throw ConfigError("codebook values do not match the " + std::to_string(bits) +
                      "-bit symmetric grid");
  }
  return cb;
}

float QuantCodebook::quantize(float x) const {
  if (bits_ == 1) return x >= 0.0f ? 1.0f : -1.0f;
  // Uniform grid over [-1, 1]: round to nearest step, ties toward +inf.
  const int half = static_cast<int>(values_.size() / 2);
  const double scaled = static_cast<double>(x) * half;
  double k = std::floor(scaled + 0.5);
  if (k < -half) k = -half;
  if (k > half) k = half;
  return values_[static_cast<std::size_t>(static_cast<int>(k) + half)];
}

int QuantCodebook::index_of(float v) const {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (values_[k] == v) return static_cast<int>(k);
  }
  return -1;
}

Tensor4 quantize(const Tensor4& x, const QuantCodebook& cb) {
  Tensor4 out(x.shape());
  const auto in = x.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = cb.quantize(in[i]);
  return out;
}

Tensor4 quantize_backward(const Tensor4& grad_out, const Tensor4& pre_activation) {
  if (!(grad_out.shape() == pre_activation.shape())) {
    throw ConfigError("quantize_backward shape mismatch " + grad_out.shape().str() + " vs " +
                      pre_activation.shape().str());
  }
  Tensor4 out(grad_out.shape());
  const auto g = grad_out.values();
  const auto x = pre_activation.values();
  auto o = out.values();
  for (std::size_t i = 0; i < g.size(); ++i) o[i] = std::fabs(x[i]) <= 1.0f ? g[i] : 0.0f;
  return out;
}

}  // namespace fatnet
