#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ember {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major float32 array. Shape `[]` is a scalar holding one element.
///
/// Tensors are plain values: copying copies the buffer. Strides are derived
/// from the shape and never stored.
class Tensor {
 public:
  Tensor() : data_(1, 0.0f) {}
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<float> data);

  static Tensor scalar(float value) { return Tensor({}, {value}); }
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, float value);
  static Tensor ones(Shape shape) { return full(std::move(shape), 1.0f); }
  static Tensor vector(std::initializer_list<float> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<float>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::int64_t rank() const noexcept { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t dim(std::int64_t axis) const;
  std::int64_t size() const noexcept { return static_cast<std::int64_t>(data_.size()); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  float at(std::initializer_list<std::int64_t> index) const;

  // Value of a single-element tensor.
  float item() const;

  // Same buffer, new shape. Element count must match.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<float> data_;
};

// Shape equality plus byte equality of the payload (distinguishes -0 and NaN payloads).
bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace ember
