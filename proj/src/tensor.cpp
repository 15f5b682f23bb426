#include "ember/tensor.hpp"

#include <cstring>

#include "ember/error.hpp"

namespace ember {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void check_dims(const Shape& shape) {
  for (auto d : shape) {
    if (d <= 0) throw Error(Errc::ShapeError, to_string(shape), "dimensions must be positive");
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(static_cast<std::size_t>(numel(shape_)), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (numel(shape_) != static_cast<std::int64_t>(data_.size())) {
    throw Error(Errc::ShapeError, to_string(shape_),
                "shape holds " + std::to_string(numel(shape_)) + " elements, buffer has " +
                    std::to_string(data_.size()));
  }
}

Tensor Tensor::full(Shape shape, float value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::vector(std::initializer_list<float> values) {
  return Tensor({static_cast<std::int64_t>(values.size())}, std::vector<float>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<float>> rows) {
  std::vector<float> data;
  std::int64_t cols = rows.size() ? static_cast<std::int64_t>(rows.begin()->size()) : 0;
  for (const auto& row : rows) {
    if (static_cast<std::int64_t>(row.size()) != cols) throw Error(Errc::ShapeError, "", "ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({static_cast<std::int64_t>(rows.size()), cols}, std::move(data));
}

std::int64_t Tensor::dim(std::int64_t axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) throw Error(Errc::AxisError, std::to_string(axis), "rank " + std::to_string(rank()));
  return shape_[static_cast<std::size_t>(axis)];
}

float Tensor::at(std::initializer_list<std::int64_t> index) const {
  if (static_cast<std::int64_t>(index.size()) != rank()) throw Error(Errc::AxisError, "", "index rank mismatch");
  std::int64_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i < 0 || i >= shape_[axis]) throw Error(Errc::IndexOutOfRange, std::to_string(i));
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return data_[static_cast<std::size_t>(flat)];
}

float Tensor::item() const {
  if (data_.size() != 1) throw Error(Errc::ShapeError, to_string(shape_), "item() needs exactly one element");
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (numel(shape) != size()) {
    throw Error(Errc::ShapeError, to_string(shape), "cannot reshape " + to_string(shape_));
  }
  return Tensor(std::move(shape), data_);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(float)) == 0;
}

}  // namespace ember
