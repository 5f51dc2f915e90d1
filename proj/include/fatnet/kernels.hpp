#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fatnet/tensor.hpp"

// OpenMP-parallel layer kernels. Every reduction that crosses the batch
// dimension is summed in sample order so results do not depend on the thread
// count. The naive serial counterparts live in reference.hpp.
namespace fatnet::kernels {

// Stride-1 cross-correlation. weights: (out_c, in_c, k, k); symmetric zero padding.
Tensor4 conv2d_forward(const Tensor4& input, const Tensor4& weights, std::size_t pad);

// grad_input may be null (first layer). grad_weights is accumulated into.
void conv2d_backward(const Tensor4& input, const Tensor4& weights, std::size_t pad,
                     const Tensor4& grad_out, Tensor4* grad_input, std::span<float> grad_weights);

// input is read as (n, c*h*w); weights: (out, in, 1, 1); output: (n, out, 1, 1).
Tensor4 fc_forward(const Tensor4& input, const Tensor4& weights);

void fc_backward(const Tensor4& input, const Tensor4& weights, const Tensor4& grad_out,
                 Tensor4* grad_input, std::span<float> grad_weights);

inline constexpr float kBatchNormEps = 1e-5f;

struct BatchNormCache {
  std::vector<float> mean;
  std::vector<float> inv_std;
  Tensor4 normalized;  // x_hat
};

// Normalizes with batch statistics; fills cache and the biased batch variance.
Tensor4 batch_norm_train(const Tensor4& input, std::span<const float> gamma,
                         std::span<const float> beta, BatchNormCache& cache,
                         std::vector<float>& batch_var);

Tensor4 batch_norm_eval(const Tensor4& input, std::span<const float> gamma,
                        std::span<const float> beta, std::span<const float> running_mean,
                        std::span<const float> running_var);

// Backward of batch_norm_train. grad_gamma/grad_beta are accumulated into.
Tensor4 batch_norm_backward(const Tensor4& grad_out, std::span<const float> gamma,
                            const BatchNormCache& cache, std::span<float> grad_gamma,
                            std::span<float> grad_beta);

// 2x2 window, stride 2, floor on odd sizes. argmax holds the flat input index
// of the first (row-major) maximum of each window.
Tensor4 max_pool2d_forward(const Tensor4& input, std::vector<std::uint32_t>* argmax);

Tensor4 max_pool2d_backward(const Tensor4& grad_out, const std::vector<std::uint32_t>& argmax,
                            const Shape4& input_shape);

}  // namespace fatnet::kernels
