#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fatnet/quantization.hpp"
#include "fatnet/rng.hpp"
#include "fatnet/tensor.hpp"

namespace fatnet {

// How the random tensor r is broadcast over (b, c, h, w):
//   element: one draw per element
//   channel: one draw per (b, c), shared over the h x w plane
//   pixel:   one draw per (b, h, w), shared over all channels
enum class FaultModel : std::uint8_t { element = 0, channel = 1, pixel = 2 };

enum class InjectionStatus : std::uint8_t { disable = 0, enable = 1 };

std::string to_string(FaultModel m);
FaultModel parse_fault_model(const std::string& s);

struct InjectionConfig {
  double p_percent = 0.0;  // total injection probability, in [0, 100]
  FaultModel model = FaultModel::channel;
  InjectionStatus status = InjectionStatus::disable;
  QuantCodebook codebook;  // error values; the activation codebook at this point
  std::uint64_t rng_seed = 0;

  // Throws ConfigError when p is outside [0, 100] or the codebook is empty.
  void validate() const;

  // Upper threshold of interval k: (p/100) * (k+1) / E. Error value k is
  // injected when threshold(k-1) <= r < threshold(k), threshold(-1) = 0.
  double threshold(std::size_t k) const;
};

/// Per-element record of the forward pass: -1 where alpha passed through,
/// otherwise the codebook index of the value written.
struct InjectionMask {
  Shape4 shape;
  std::vector<std::int8_t> value_index;

  bool injected(std::size_t i) const { return value_index[i] >= 0; }
  std::size_t count() const;
};

Tensor4 draw_r(const Shape4& shape, FaultModel model, Rng& rng);

struct InjectionResult {
  Tensor4 output;
  InjectionMask mask;
};

// Applies the threshold rule to a given r (already broadcast to alpha's shape).
InjectionResult inject_with_r(const Tensor4& alpha, const Tensor4& r, const InjectionConfig& cfg);

// Disabled status is the identity and draws nothing from rng.
InjectionResult inject_forward(const Tensor4& alpha, const InjectionConfig& cfg, Rng& rng);

// Zero where an error was injected, pass-through elsewhere; no rescaling.
Tensor4 inject_backward(const Tensor4& grad_out, const InjectionMask& mask);

/// keep[i] == 1 where the element survived.
struct DropoutMask {
  Shape4 shape;
  std::vector<std::uint8_t> keep;
};

struct DropoutResult {
  Tensor4 output;
  DropoutMask mask;
};

// p is a fraction in [0, 1). Survivors are scaled by 1 / (1 - p).
DropoutResult dropout_forward(const Tensor4& alpha, double p, Rng& rng);
Tensor4 dropout_backward(const Tensor4& grad_out, const DropoutMask& mask, double p);

// Drops whole (b, c) planes. Backward is dropout_backward with the plane mask.
DropoutResult dropout2d_forward(const Tensor4& alpha, double p, Rng& rng);

}  // namespace fatnet
