#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fatnet/injection.hpp"
#include "fatnet/kernels.hpp"
#include "fatnet/quantization.hpp"
#include "fatnet/rng.hpp"
#include "fatnet/tensor.hpp"

namespace fatnet {

enum class LayerKind : std::uint32_t {
  conv2d = 0,
  fully_connected = 1,
  batch_norm = 2,
  max_pool = 3,
  quant_act = 4,
  injection = 5,
  dropout = 6,
  dropout2d = 7,
};

std::string to_string(LayerKind k);

// Kind-specific fields; unused fields stay at their defaults.
struct LayerSpec {
  LayerKind kind = LayerKind::conv2d;
  std::size_t in_channels = 0;   // conv2d, fully_connected (fan-in)
  std::size_t out_channels = 0;  // conv2d, fully_connected, batch_norm
  std::size_t kernel = 0;        // conv2d
  std::size_t padding = 0;       // conv2d
  int weight_bits = kFloatBits;  // conv2d, fully_connected
  int act_bits = kFloatBits;     // quant_act, injection
  double probability = 0.0;      // injection: percent; dropout, dropout2d: fraction
  FaultModel fault_model = FaultModel::channel;

  // Throws ConfigError on out-of-range fields.
  void validate() const;
};

// A trainable tensor; its gradient lives in value.grad().
struct Parameter {
  std::string name;
  Tensor4 value;
};

/// A network stage. `infer` is the evaluation-mode forward pass: it is const
/// and must not touch any mutable state, so a frozen network can be shared by
/// many threads. `forward` is the training-mode pass and caches what `backward`
/// needs.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerSpec spec() const = 0;
  LayerKind kind() const { return spec().kind; }
  virtual Shape4 output_shape(const Shape4& in) const = 0;

  virtual Tensor4 infer(const Tensor4& x) const = 0;
  virtual Tensor4 forward(const Tensor4& x) = 0;
  // Returns the gradient w.r.t. the input; may return an empty tensor when
  // need_input_grad is false.
  virtual Tensor4 backward(const Tensor4& grad_out, bool need_input_grad) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  // Non-trainable state that still belongs in a checkpoint (BN running stats).
  virtual std::vector<Parameter*> buffers() { return {}; }
  // Called after every optimizer step.
  virtual void after_update() {}

  virtual std::unique_ptr<Layer> clone() const = 0;
};

class Conv2dLayer : public Layer {
 public:
  Conv2dLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
              std::size_t padding, int weight_bits);

  LayerSpec spec() const override;
  Shape4 output_shape(const Shape4& in) const override;
  Tensor4 infer(const Tensor4& x) const override;
  Tensor4 forward(const Tensor4& x) override;
  Tensor4 backward(const Tensor4& grad_out, bool need_input_grad) override;
  std::vector<Parameter*> parameters() override { return {&weights_}; }
  void after_update() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2dLayer>(*this); }

  Parameter& weights() { return weights_; }
  const Parameter& weights() const { return weights_; }
  // Latent weights mapped onto the weight codebook (identity at 32 bits).
  Tensor4 quantized_weights() const;

 private:
  std::size_t in_channels_, out_channels_, kernel_, padding_;
  int weight_bits_;
  Parameter weights_;
  Tensor4 input_cache_;
  Tensor4 qweights_cache_;
};

class FullyConnectedLayer : public Layer {
 public:
  FullyConnectedLayer(std::size_t in_features, std::size_t out_features, int weight_bits);

  LayerSpec spec() const override;
  Shape4 output_shape(const Shape4& in) const override;
  Tensor4 infer(const Tensor4& x) const override;
  Tensor4 forward(const Tensor4& x) override;
  Tensor4 backward(const Tensor4& grad_out, bool need_input_grad) override;
  std::vector<Parameter*> parameters() override { return {&weights_}; }
  void after_update() override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<FullyConnectedLayer>(*this);
  }

  Parameter& weights() { return weights_; }
  Tensor4 quantized_weights() const;

 private:
  std::size_t in_features_, out_features_;
  int weight_bits_;
  Parameter weights_;
  Tensor4 input_cache_;
  Tensor4 qweights_cache_;
};

class BatchNormLayer : public Layer {
 public:
  explicit BatchNormLayer(std::size_t channels, float momentum = 0.1f);

  LayerSpec spec() const override;
  Shape4 output_shape(const Shape4& in) const override;
  Tensor4 infer(const Tensor4& x) const override;
  Tensor4 forward(const Tensor4& x) override;
  Tensor4 backward(const Tensor4& grad_out, bool need_input_grad) override;
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Parameter*> buffers() override { return {&running_mean_, &running_var_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNormLayer>(*this); }

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  Parameter& running_mean() { return running_mean_; }
  Parameter& running_var() { return running_var_; }

 private:
  std::size_t channels_;
  float momentum_;
  Parameter gamma_, beta_, running_mean_, running_var_;
  kernels::BatchNormCache cache_;
};

class MaxPoolLayer : public Layer {
 public:
  LayerSpec spec() const override { return {.kind = LayerKind::max_pool}; }
  Shape4 output_shape(const Shape4& in) const override;
  Tensor4 infer(const Tensor4& x) const override;
  Tensor4 forward(const Tensor4& x) override;
  Tensor4 backward(const Tensor4& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPoolLayer>(*this); }

 private:
  Shape4 input_shape_;
  std::vector<std::uint32_t> argmax_;
};

// Quantized activation with a straight-through estimator on [-1, 1].
class QuantActLayer : public Layer {
 public:
  explicit QuantActLayer(int act_bits);

  LayerSpec spec() const override;
  Shape4 output_shape(const Shape4& in) const override { return in; }
  Tensor4 infer(const Tensor4& x) const override;
  Tensor4 forward(const Tensor4& x) override;
  Tensor4 backward(const Tensor4& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<QuantActLayer>(*this); }

  int act_bits() const { return act_bits_; }
  // Empty for 32-bit passthrough.
  const std::optional<QuantCodebook>& codebook() const { return codebook_; }

 private:
  int act_bits_;
  std::optional<QuantCodebook> codebook_;
  Tensor4 pre_activation_;
};

/// Training-time stuck-at error injection. Transparent in `infer`; in
/// `forward` it injects according to its config when enabled.
class InjectionLayer : public Layer {
 public:
  explicit InjectionLayer(InjectionConfig cfg);

  LayerSpec spec() const override;
  Shape4 output_shape(const Shape4& in) const override { return in; }
  Tensor4 infer(const Tensor4& x) const override { return x; }
  Tensor4 forward(const Tensor4& x) override;
  Tensor4 backward(const Tensor4& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<InjectionLayer>(*this); }

  const InjectionConfig& config() const { return cfg_; }
  void set_status(InjectionStatus s) { cfg_.status = s; }
  void set_probability(double p_percent);
  void set_model(FaultModel m) { cfg_.model = m; }
  // Restarts the private rng stream.
  void reseed(std::uint64_t seed);
  const InjectionMask& last_mask() const { return mask_; }

 private:
  InjectionConfig cfg_;
  Rng rng_;
  InjectionMask mask_;
};

class DropoutLayer : public Layer {
 public:
  DropoutLayer(double p, bool per_channel, std::uint64_t seed = 0);

  LayerSpec spec() const override;
  Shape4 output_shape(const Shape4& in) const override { return in; }
  Tensor4 infer(const Tensor4& x) const override { return x; }
  Tensor4 forward(const Tensor4& x) override;
  Tensor4 backward(const Tensor4& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<DropoutLayer>(*this); }

  void set_enabled(bool on) { enabled_ = on; }
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

 private:
  double p_;
  bool per_channel_;
  bool enabled_ = true;
  Rng rng_;
  DropoutMask mask_;
};

// Builds a layer with default-initialized parameters from its spec (used when
// loading checkpoints).
std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

}  // namespace fatnet
