#include "fatnet/tensor.hpp"

#include <algorithm>

#include "fatnet/errors.hpp"

namespace fatnet {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

Tensor4::Tensor4(Shape4 shape, float fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor4::Tensor4(Shape4 shape, std::vector<float> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.size()) {
    throw ConfigError("tensor value count " + std::to_string(data_.size()) +
                      " does not match shape " + shape_.str());
  }
}

std::span<float> Tensor4::ensure_grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0f);
  return grad_;
}

void Tensor4::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0f); }

Tensor4 Tensor4::reshaped(Shape4 shape) const {
  if (shape.size() != shape_.size()) {
    throw ConfigError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  Tensor4 out;
  out.shape_ = shape;
  out.data_ = data_;
  return out;
}

void Tensor4::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

Tensor4 Tensor4::slice_batch(std::size_t begin, std::size_t count) const {
  if (begin + count > shape_.n) throw ConfigError("batch slice out of range");
  Shape4 s = shape_;
  s.n = count;
  const std::size_t stride = shape_.sample();
  std::vector<float> v(data_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                       data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * stride));
  return Tensor4(s, std::move(v));
}

}  // namespace fatnet
