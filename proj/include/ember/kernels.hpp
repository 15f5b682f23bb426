#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ember/tensor.hpp"

// Untraced tensor arithmetic. Every function here is a pure function of its
// arguments; the traced versions in autodiff.hpp call into these.
namespace ember {

enum class UnaryKind { relu, sigmoid, neg, exp, log };
enum class BinaryKind { add, sub, mul, div };
enum class ReduceKind { sum, mean, max };
enum class ResizeKind { maxpool2, upsample_nearest2 };

// Axes to reduce over; std::nullopt means every axis.
using Axes = std::optional<std::vector<std::int64_t>>;

struct Conv2dOptions {
  std::int64_t stride = 1;
  std::int64_t padding = 0;
};

Tensor apply_unary(UnaryKind kind, const Tensor& x);
Tensor clamp_min(const Tensor& x, float lo);

// Trailing-axis broadcasting: shapes are right-aligned and a dimension of 1
// stretches to match the other operand.
Shape broadcast_shape(const Shape& a, const Shape& b);
Tensor apply_binary(BinaryKind kind, const Tensor& a, const Tensor& b);
// Sums a broadcast gradient back down to `target` (inverse of broadcasting).
Tensor sum_to_shape(const Tensor& grad, const Shape& target);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor conv2d(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias, Conv2dOptions opts = {});

Tensor pool_or_resize(ResizeKind kind, const Tensor& x);
inline Tensor maxpool2(const Tensor& x) { return pool_or_resize(ResizeKind::maxpool2, x); }
inline Tensor upsample_nearest2(const Tensor& x) { return pool_or_resize(ResizeKind::upsample_nearest2, x); }

Tensor reduce(ReduceKind kind, const Tensor& x, const Axes& axes = std::nullopt);
Tensor softmax(const Tensor& x, std::int64_t axis);

Tensor reshape(const Tensor& x, const Shape& shape);
Tensor concat(std::span<const Tensor> inputs, std::int64_t axis);

namespace detail {

std::int64_t normalize_axis(std::int64_t axis, std::int64_t rank);
std::vector<bool> reduced_axes_mask(const Axes& axes, std::int64_t rank);
// For each input element, the flat index of the output element it reduces into.
std::vector<std::int64_t> reduce_index_map(const Shape& shape, const std::vector<bool>& reduced);
Shape reduced_shape(const Shape& shape, const std::vector<bool>& reduced);
// For each output element of the broadcast shape, the flat index into `in`.
std::vector<std::int64_t> broadcast_index_map(const Shape& out, const Shape& in);
// Flat index of the 2x2 window maximum for each maxpool2 output element.
std::vector<std::int64_t> maxpool2_argmax(const Tensor& x);

}  // namespace detail

}  // namespace ember
