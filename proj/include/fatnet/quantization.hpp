#pragma once

#include <span>
#include <vector>

#include "fatnet/tensor.hpp"

namespace fatnet {

// Bit width 32 means "no quantization" (float passthrough).
inline constexpr int kFloatBits = 32;

bool is_supported_bitwidth(int bits);  // {1,2,3,4,32}

/// Ordered set of representable values for a bit width. Doubles as the set of
/// stuck-at error values for activations of that width.
///
/// 1 bit gives {-1, +1}. For 2..4 bits the grid is symmetric and contains zero:
/// 2^b - 1 values spaced 2 / (2^b - 2) apart, e.g. 2 bits gives {-1, 0, +1}.
class QuantCodebook {
 public:
  QuantCodebook() = default;

  int bitwidth() const { return bits_; }
  std::span<const float> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  float operator[](std::size_t k) const { return values_[k]; }

  // Nearest value; ties round toward +inf.
  float quantize(float x) const;
  // Index of the exact member equal to v, or -1.
  int index_of(float v) const;
  bool contains(float v) const { return index_of(v) >= 0; }

  bool operator==(const QuantCodebook&) const = default;

  friend QuantCodebook make_codebook(int bits);
  // Rebuilds a codebook read back from a checkpoint; checks it against make_codebook.
  static QuantCodebook from_values(int bits, std::vector<float> values);

 private:
  int bits_ = 0;
  std::vector<float> values_;
};

// Throws ConfigError for bit widths outside {1,2,3,4}.
QuantCodebook make_codebook(int bits);

Tensor4 quantize(const Tensor4& x, const QuantCodebook& cb);

// Straight-through estimator: grad passes where |pre_activation| <= 1.
Tensor4 quantize_backward(const Tensor4& grad_out, const Tensor4& pre_activation);

}  // namespace fatnet
