#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fatnet/layers.hpp"
#include "fatnet/tensor.hpp"

namespace fatnet {

// Layers whose position marks a fault site: faults are applied to the
// activation tensor they pass along (they are transparent at inference).
inline bool is_fault_site(LayerKind k) {
  return k == LayerKind::injection || k == LayerKind::dropout2d || k == LayerKind::dropout;
}

/// Ordered stack of layers with per-layer output shapes. Copyable by deep clone.
class Network {
 public:
  Network() = default;
  // sample_shape.n is ignored; shapes are tracked per sample.
  explicit Network(Shape4 sample_shape, std::size_t classes = 0, std::string id = {});

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // Throws ConfigError if the layer does not accept the current output shape.
  void add(std::unique_ptr<Layer> layer);

  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    add(std::move(layer));
    return ref;
  }

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  const Shape4& input_shape() const { return input_shape_; }
  // Per-sample output shape (n = 1) of layer i.
  const Shape4& output_shape(std::size_t i) const { return shapes_[i]; }
  Shape4 output_shape() const { return shapes_.empty() ? input_shape_ : shapes_.back(); }
  std::size_t classes() const { return classes_; }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  // Evaluation mode; const and free of side effects.
  Tensor4 infer(const Tensor4& x) const { return infer_range(x, 0, layers_.size()); }
  // Runs layers [begin, end).
  Tensor4 infer_range(const Tensor4& x, std::size_t begin, std::size_t end) const;

  // Training mode.
  Tensor4 forward(const Tensor4& x);
  // Backpropagates from the output gradient, accumulating parameter grads.
  void backward(const Tensor4& grad_output);

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> buffers();
  void zero_grad();
  void after_update();

  // Layer indices of fault sites, in network order.
  std::vector<std::size_t> fault_sites() const;
  std::vector<InjectionLayer*> injection_layers();

  // Each injection layer must directly follow a quant_act or max_pool and no
  // quant_act/max_pool may be followed by more than one fault site.
  void check_injection_placement() const;

  // Index of the nearest conv2d/fully_connected layer before `index`.
  std::size_t producing_layer(std::size_t index) const;

 private:
  Shape4 input_shape_;
  std::size_t classes_ = 0;
  std::string id_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Shape4> shapes_;
};

}  // namespace fatnet
