#pragma once

#include <span>

#include "fatnet/tensor.hpp"

// Serial, loop-for-loop reference versions of the forward kernels. Used as test
// oracles and as the baseline in the kernel benchmark; never on the hot path.
namespace fatnet::reference {

Tensor4 conv2d(const Tensor4& input, const Tensor4& weights, std::size_t pad);

Tensor4 fully_connected(const Tensor4& input, const Tensor4& weights);

// Two-pass per-channel mean/variance, then normalize-scale-shift.
Tensor4 batch_norm(const Tensor4& input, std::span<const float> gamma,
                   std::span<const float> beta);

Tensor4 max_pool2d(const Tensor4& input);

}  // namespace fatnet::reference
