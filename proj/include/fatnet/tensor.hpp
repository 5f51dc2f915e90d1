#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fatnet {

// (batch, channels, height, width)
struct Shape4 {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  std::size_t sample() const { return c * h * w; }

  bool operator==(const Shape4&) const = default;

  std::string str() const;
};

/// Dense row-major rank-4 float tensor with an optional gradient buffer of the
/// same shape. The gradient buffer is empty until `ensure_grad()` is called.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, float fill = 0.0f);
  Tensor4(Shape4 shape, std::vector<float> values);

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  std::size_t index(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[index(n, c, h, w)];
  }
  float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[index(n, c, h, w)];
  }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  bool has_grad() const { return !grad_.empty(); }
  // Allocates (zeroed) on first use.
  std::span<float> ensure_grad();
  std::span<float> grad() { return grad_; }
  std::span<const float> grad() const { return grad_; }
  void zero_grad();

  // Same data, new shape with identical element count.
  Tensor4 reshaped(Shape4 shape) const;

  void fill(float v);

  // Copies samples [begin, begin + count) along the batch dimension.
  Tensor4 slice_batch(std::size_t begin, std::size_t count) const;

 private:
  Shape4 shape_;
  std::vector<float> data_;
  std::vector<float> grad_;
};

}  // namespace fatnet
