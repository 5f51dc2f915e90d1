#include "fatnet/layers.hpp"

#include <algorithm>

#include "fatnet/errors.hpp"

namespace fatnet {

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::batch_norm: return "batch_norm";
    case LayerKind::max_pool: return "max_pool";
    case LayerKind::quant_act: return "quant_act";
    case LayerKind::injection: return "injection";
    case LayerKind::dropout: return "dropout";
    case LayerKind::dropout2d: return "dropout2d";
  }
  return "?";
}

void LayerSpec::validate() const {
  switch (kind) {
    case LayerKind::conv2d:
      if (kernel < 1) throw ConfigError("conv2d kernel size must be >= 1");
      [[fallthrough]];
    case LayerKind::fully_connected:
      if (in_channels < 1 || out_channels < 1) {
        throw ConfigError(to_string(kind) + " channel counts must be >= 1");
      }
      if (!is_supported_bitwidth(weight_bits)) {
        throw ConfigError("unsupported weight bit width " + std::to_string(weight_bits));
      }
      break;
    case LayerKind::batch_norm:
      if (out_channels < 1) throw ConfigError("batch_norm needs >= 1 channel");
      break;
    case LayerKind::quant_act:
      if (!is_supported_bitwidth(act_bits)) {
        throw ConfigError("unsupported activation bit width " + std::to_string(act_bits));
      }
      break;
    case LayerKind::injection:
      if (act_bits < 1 || act_bits > 4) {
        throw ConfigError("injection needs a 1..4-bit activation codebook");
      }
      if (!(probability >= 0.0 && probability <= 100.0)) {
        throw ConfigError("injection probability must be in [0, 100]");
      }
      break;
    case LayerKind::dropout:
    case LayerKind::dropout2d:
      if (!(probability >= 0.0 && probability < 1.0)) {
        throw ConfigError("dropout probability must be in [0, 1)");
      }
      break;
    case LayerKind::max_pool:
      break;
  }
}

namespace {

Tensor4 quantize_weights(const Tensor4& latent, int bits) {
  if (bits == kFloatBits) return latent;
  return quantize(latent, make_codebook(bits));
}

void clip_unit(Tensor4& t) {
  for (auto& v : t.values()) v = std::clamp(v, -1.0f, 1.0f);
}

// Straight-through estimator for weights: pass where |latent| <= 1.
void accumulate_weight_grad(Parameter& p, std::span<const float> g, int bits) {
  auto dst = p.value.ensure_grad();
  const auto w = p.value.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (bits == kFloatBits || std::fabs(w[i]) <= 1.0f) dst[i] += g[i];
  }
}

}  // namespace

// --- Conv2dLayer ---------------------------------------------------------

Conv2dLayer::Conv2dLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                         std::size_t padding, int weight_bits)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      padding_(padding),
      weight_bits_(weight_bits),
      weights_{"weight", Tensor4({out_channels, in_channels, kernel, kernel})} {
  spec().validate();
}

LayerSpec Conv2dLayer::spec() const {
  return {.kind = LayerKind::conv2d,
          .in_channels = in_channels_,
          .out_channels = out_channels_,
          .kernel = kernel_,
          .padding = padding_,
          .weight_bits = weight_bits_};
}

Shape4 Conv2dLayer::output_shape(const Shape4& in) const {
  if (in.c != in_channels_) {
    throw ConfigError("conv2d expects " + std::to_string(in_channels_) + " input channels, got " +
                      std::to_string(in.c));
  }
  if (in.h + 2 * padding_ < kernel_ || in.w + 2 * padding_ < kernel_) {
    throw ConfigError("conv2d kernel " + std::to_string(kernel_) + " larger than input " + in.str());
  }
  return {in.n, out_channels_, in.h + 2 * padding_ - kernel_ + 1, in.w + 2 * padding_ - kernel_ + 1};
}

Tensor4 Conv2dLayer::quantized_weights() const { return quantize_weights(weights_.value, weight_bits_); }

Tensor4 Conv2dLayer::infer(const Tensor4& x) const {
  return kernels::conv2d_forward(x, quantized_weights(), padding_);
}

Tensor4 Conv2dLayer::forward(const Tensor4& x) {
  input_cache_ = x;
  qweights_cache_ = quantized_weights();
  return kernels::conv2d_forward(x, qweights_cache_, padding_);
}

Tensor4 Conv2dLayer::backward(const Tensor4& grad_out, bool need_input_grad) {
  std::vector<float> gw(weights_.value.size(), 0.0f);
  Tensor4 grad_in;
  kernels::conv2d_backward(input_cache_, qweights_cache_, padding_, grad_out,
                           need_input_grad ? &grad_in : nullptr, gw);
  accumulate_weight_grad(weights_, gw, weight_bits_);
  return grad_in;
}

void Conv2dLayer::after_update() {
  if (weight_bits_ != kFloatBits) clip_unit(weights_.value);
}

// --- FullyConnectedLayer -------------------------------------------------

FullyConnectedLayer::FullyConnectedLayer(std::size_t in_features, std::size_t out_features,
                                         int weight_bits)
    : in_features_(in_features),
      out_features_(out_features),
      weight_bits_(weight_bits),
      weights_{"weight", Tensor4({out_features, in_features, 1, 1})} {
  spec().validate();
}

LayerSpec FullyConnectedLayer::spec() const {
  return {.kind = LayerKind::fully_connected,
          .in_channels = in_features_,
          .out_channels = out_features_,
          .weight_bits = weight_bits_};
}

Shape4 FullyConnectedLayer::output_shape(const Shape4& in) const {
  if (in.sample() != in_features_) {
    throw ConfigError("fully_connected expects " + std::to_string(in_features_) +
                      " input features, got " + std::to_string(in.sample()));
  }
  return {in.n, out_features_, 1, 1};
}

Tensor4 FullyConnectedLayer::quantized_weights() const {
  return quantize_weights(weights_.value, weight_bits_);
}

Tensor4 FullyConnectedLayer::infer(const Tensor4& x) const {
  return kernels::fc_forward(x, quantized_weights());
}

Tensor4 FullyConnectedLayer::forward(const Tensor4& x) {
  input_cache_ = x;
  qweights_cache_ = quantized_weights();
  return kernels::fc_forward(x, qweights_cache_);
}

Tensor4 FullyConnectedLayer::backward(const Tensor4& grad_out, bool need_input_grad) {
  std::vector<float> gw(weights_.value.size(), 0.0f);
  Tensor4 grad_in;
  kernels::fc_backward(input_cache_, qweights_cache_, grad_out,
                       need_input_grad ? &grad_in : nullptr, gw);
  accumulate_weight_grad(weights_, gw, weight_bits_);
  return grad_in;
}

void FullyConnectedLayer::after_update() {
  if (weight_bits_ != kFloatBits) clip_unit(weights_.value);
}

// --- BatchNormLayer ------------------------------------------------------

BatchNormLayer::BatchNormLayer(std::size_t channels, float momentum)
    : channels_(channels),
      momentum_(momentum),
      gamma_{"gamma", Tensor4({channels, 1, 1, 1}, 1.0f)},
      beta_{"beta", Tensor4({channels, 1, 1, 1}, 0.0f)},
      running_mean_{"running_mean", Tensor4({channels, 1, 1, 1}, 0.0f)},
      running_var_{"running_var", Tensor4({channels, 1, 1, 1}, 1.0f)} {
  spec().validate();
}

LayerSpec BatchNormLayer::spec() const {
  return {.kind = LayerKind::batch_norm, .out_channels = channels_};
}

Shape4 BatchNormLayer::output_shape(const Shape4& in) const {
  if (in.c != channels_) {
    throw ConfigError("batch_norm has " + std::to_string(channels_) + " channels, input has " +
                      std::to_string(in.c));
  }
  return in;
}

Tensor4 BatchNormLayer::infer(const Tensor4& x) const {
  output_shape(x.shape());
  return kernels::batch_norm_eval(x, gamma_.value.values(), beta_.value.values(),
                                  running_mean_.value.values(), running_var_.value.values());
}

Tensor4 BatchNormLayer::forward(const Tensor4& x) {
  output_shape(x.shape());
  std::vector<float> batch_var;
  Tensor4 out = kernels::batch_norm_train(x, gamma_.value.values(), beta_.value.values(), cache_,
                                          batch_var);
  const double count = static_cast<double>(x.shape().n * x.shape().plane());
  const double unbias = count > 1 ? count / (count - 1) : 1.0;
  auto rm = running_mean_.value.values();
  auto rv = running_var_.value.values();
  for (std::size_t c = 0; c < channels_; ++c) {
    rm[c] = (1.0f - momentum_) * rm[c] + momentum_ * cache_.mean[c];
    rv[c] = (1.0f - momentum_) * rv[c] + momentum_ * static_cast<float>(batch_var[c] * unbias);
  }
  return out;
}

Tensor4 BatchNormLayer::backward(const Tensor4& grad_out, bool /*need_input_grad*/) {
  return kernels::batch_norm_backward(grad_out, gamma_.value.values(), cache_,
                                      gamma_.value.ensure_grad(), beta_.value.ensure_grad());
}

// --- MaxPoolLayer --------------------------------------------------------

Shape4 MaxPoolLayer::output_shape(const Shape4& in) const {
  if (in.h < 2 || in.w < 2) throw ConfigError("max_pool input " + in.str() + " smaller than 2x2");
  return {in.n, in.c, in.h / 2, in.w / 2};
}

Tensor4 MaxPoolLayer::infer(const Tensor4& x) const { return kernels::max_pool2d_forward(x, nullptr); }

Tensor4 MaxPoolLayer::forward(const Tensor4& x) {
  input_shape_ = x.shape();
  return kernels::max_pool2d_forward(x, &argmax_);
}

Tensor4 MaxPoolLayer::backward(const Tensor4& grad_out, bool /*need_input_grad*/) {
  return kernels::max_pool2d_backward(grad_out, argmax_, input_shape_);
}

// --- QuantActLayer -------------------------------------------------------

QuantActLayer::QuantActLayer(int act_bits) : act_bits_(act_bits) {
  spec().validate();
  if (act_bits != kFloatBits) codebook_ = make_codebook(act_bits);
}

LayerSpec QuantActLayer::spec() const { return {.kind = LayerKind::quant_act, .act_bits = act_bits_}; }

Tensor4 QuantActLayer::infer(const Tensor4& x) const {
  return codebook_ ? quantize(x, *codebook_) : x;
}

Tensor4 QuantActLayer::forward(const Tensor4& x) {
  pre_activation_ = x;
  return infer(x);
}

Tensor4 QuantActLayer::backward(const Tensor4& grad_out, bool /*need_input_grad*/) {
  if (!codebook_) return grad_out;
  return quantize_backward(grad_out, pre_activation_);
}

// --- InjectionLayer ------------------------------------------------------

InjectionLayer::InjectionLayer(InjectionConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.rng_seed) {
  cfg_.validate();
}

LayerSpec InjectionLayer::spec() const {
  return {.kind = LayerKind::injection,
          .act_bits = cfg_.codebook.bitwidth(),
          .probability = cfg_.p_percent,
          .fault_model = cfg_.model};
}

void InjectionLayer::set_probability(double p_percent) {
  InjectionConfig next = cfg_;
  next.p_percent = p_percent;
  next.validate();
  cfg_ = next;
}

void InjectionLayer::reseed(std::uint64_t seed) {
  cfg_.rng_seed = seed;
  rng_.seed(seed);
}

Tensor4 InjectionLayer::forward(const Tensor4& x) {
  InjectionResult res = inject_forward(x, cfg_, rng_);
  mask_ = std::move(res.mask);
  return std::move(res.output);
}

Tensor4 InjectionLayer::backward(const Tensor4& grad_out, bool /*need_input_grad*/) {
  return inject_backward(grad_out, mask_);
}

// --- DropoutLayer --------------------------------------------------------

DropoutLayer::DropoutLayer(double p, bool per_channel, std::uint64_t seed)
    : p_(p), per_channel_(per_channel), rng_(seed) {
  spec().validate();
}

LayerSpec DropoutLayer::spec() const {
  return {.kind = per_channel_ ? LayerKind::dropout2d : LayerKind::dropout, .probability = p_};
}

Tensor4 DropoutLayer::forward(const Tensor4& x) {
  if (!enabled_) {
    mask_ = DropoutMask{x.shape(), std::vector<std::uint8_t>(x.size(), 1)};
    return x;
  }
  DropoutResult res = per_channel_ ? dropout2d_forward(x, p_, rng_) : dropout_forward(x, p_, rng_);
  mask_ = std::move(res.mask);
  return std::move(res.output);
}

Tensor4 DropoutLayer::backward(const Tensor4& grad_out, bool /*need_input_grad*/) {
  return dropout_backward(grad_out, mask_, enabled_ ? p_ : 0.0);
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case LayerKind::conv2d:
      return std::make_unique<Conv2dLayer>(spec.in_channels, spec.out_channels, spec.kernel,
                                           spec.padding, spec.weight_bits);
    case LayerKind::fully_connected:
      return std::make_unique<FullyConnectedLayer>(spec.in_channels, spec.out_channels,
                                                   spec.weight_bits);
    case LayerKind::batch_norm: return std::make_unique<BatchNormLayer>(spec.out_channels);
    case LayerKind::max_pool: return std::make_unique<MaxPoolLayer>();
    case LayerKind::quant_act: return std::make_unique<QuantActLayer>(spec.act_bits);
    case LayerKind::injection: {
      InjectionConfig cfg;
      cfg.p_percent = spec.probability;
      cfg.model = spec.fault_model;
      cfg.codebook = make_codebook(spec.act_bits);
      return std::make_unique<InjectionLayer>(cfg);
    }
    case LayerKind::dropout: return std::make_unique<DropoutLayer>(spec.probability, false);
    case LayerKind::dropout2d: return std::make_unique<DropoutLayer>(spec.probability, true);
  }
  throw ConfigError("unknown layer kind");
}

}  // namespace fatnet
