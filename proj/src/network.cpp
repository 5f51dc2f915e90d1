#include "fatnet/network.hpp"

#include "fatnet/errors.hpp"

namespace fatnet {

Network::Network(Shape4 sample_shape, std::size_t classes, std::string id)
    : input_shape_{1, sample_shape.c, sample_shape.h, sample_shape.w},
      classes_(classes),
      id_(std::move(id)) {}

Network::Network(const Network& other)
    : input_shape_(other.input_shape_),
      classes_(other.classes_),
      id_(other.id_),
      shapes_(other.shapes_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Network::add(std::unique_ptr<Layer> layer) {
  const Shape4 in = output_shape();
  Shape4 out = layer->output_shape(in);
  out.n = 1;
  shapes_.push_back(out);
  layers_.push_back(std::move(layer));
}

Tensor4 Network::infer_range(const Tensor4& x, std::size_t begin, std::size_t end) const {
  if (begin > end || end > layers_.size()) throw ConfigError("infer_range: bad layer range");
  const Shape4 expected = begin == 0 ? input_shape_ : shapes_[begin - 1];
  if (x.shape().sample() != expected.sample()) {
    throw ConfigError("network input " + x.shape().str() + " does not match " + expected.str());
  }
  if (begin == end) return x;
  Tensor4 cur = layers_[begin]->infer(x);
  for (std::size_t i = begin + 1; i < end; ++i) cur = layers_[i]->infer(cur);
  return cur;
}

Tensor4 Network::forward(const Tensor4& x) {
  if (x.shape().sample() != input_shape_.sample()) {
    throw ConfigError("network input " + x.shape().str() + " does not match " + input_shape_.str());
  }
  Tensor4 cur = x;
  for (auto& l : layers_) cur = l->forward(cur);
  return cur;
}

void Network::backward(const Tensor4& grad_output) {
  Tensor4 g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(g, i > 0);
  }
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_)
    for (Parameter* p : l->parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> Network::buffers() {
  std::vector<Parameter*> out;
  for (auto& l : layers_)
    for (Parameter* p : l->buffers()) out.push_back(p);
  return out;
}

void Network::zero_grad() {
  for (Parameter* p : parameters()) {
    p->value.ensure_grad();
    p->value.zero_grad();
  }
}

void Network::after_update() {
  for (auto& l : layers_) l->after_update();
}

std::vector<std::size_t> Network::fault_sites() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (is_fault_site(layers_[i]->kind())) out.push_back(i);
  }
  return out;
}

std::vector<InjectionLayer*> Network::injection_layers() {
  std::vector<InjectionLayer*> out;
  for (auto& l : layers_) {
    if (auto* inj = dynamic_cast<InjectionLayer*>(l.get())) out.push_back(inj);
  }
  return out;
}

void Network::check_injection_placement() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerKind k = layers_[i]->kind();
    if (k != LayerKind::injection) continue;
    const LayerKind prev = i > 0 ? layers_[i - 1]->kind() : LayerKind::conv2d;
    if (i == 0 || (prev != LayerKind::quant_act && prev != LayerKind::max_pool)) {
      throw ConfigError("injection layer " + std::to_string(i) +
                        " must follow an activation or pooling layer");
    }
    if (i + 1 < layers_.size() && is_fault_site(layers_[i + 1]->kind())) {
      throw ConfigError("layer " + std::to_string(i) + " is followed by more than one fault site");
    }
  }
}

std::size_t Network::producing_layer(std::size_t index) const {
  for (std::size_t i = index + 1; i-- > 0;) {
    const LayerKind k = layers_[i]->kind();
    if (k == LayerKind::conv2d || k == LayerKind::fully_connected) return i;
  }
  throw ConfigError("no conv2d/fully_connected layer precedes layer " + std::to_string(index));
}

}  // namespace fatnet
