#include "ember/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "ember/error.hpp"

namespace ember {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

void require_rank(const Tensor& t, std::int64_t rank, const char* what) {
  if (t.rank() != rank) {
    throw Error(Errc::ShapeError, to_string(t.shape()),
                std::string(what) + " expects rank " + std::to_string(rank));
  }
}

}  // namespace

namespace detail {

std::int64_t normalize_axis(std::int64_t axis, std::int64_t rank) {
  const std::int64_t a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) throw Error(Errc::AxisError, std::to_string(axis), "rank " + std::to_string(rank));
  return a;
}

std::vector<bool> reduced_axes_mask(const Axes& axes, std::int64_t rank) {
  std::vector<bool> mask(static_cast<std::size_t>(rank), !axes.has_value());
  if (!axes) return mask;
  for (auto axis : *axes) {
    auto a = static_cast<std::size_t>(normalize_axis(axis, rank));
    if (mask[a]) throw Error(Errc::AxisError, std::to_string(axis), "duplicate axis");
    mask[a] = true;
  }
  return mask;
}

Shape reduced_shape(const Shape& shape, const std::vector<bool>& reduced) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (!reduced[i]) out.push_back(shape[i]);
  }
  return out;
}

std::vector<std::int64_t> reduce_index_map(const Shape& shape, const std::vector<bool>& reduced) {
  const auto rank = shape.size();
  // Output stride for each input axis; zero for reduced axes.
  std::vector<std::int64_t> stride(rank, 0);
  std::int64_t s = 1;
  for (std::size_t i = rank; i-- > 0;) {
    if (!reduced[i]) {
      stride[i] = s;
      s *= shape[i];
    }
  }
  std::vector<std::int64_t> map(static_cast<std::size_t>(numel(shape)));
  std::vector<std::int64_t> idx(rank, 0);
  std::int64_t out = 0;
  for (auto& m : map) {
    m = out;
    for (std::size_t i = rank; i-- > 0;) {
      ++idx[i];
      out += stride[i];
      if (idx[i] < shape[i]) break;
      out -= stride[i] * idx[i];
      idx[i] = 0;
    }
  }
  return map;
}

std::vector<std::int64_t> broadcast_index_map(const Shape& out, const Shape& in) {
  const auto rank = out.size();
  const auto offset = rank - in.size();
  std::vector<std::int64_t> in_stride(rank, 0);
  std::int64_t s = 1;
  for (std::size_t i = in.size(); i-- > 0;) {
    in_stride[i + offset] = in[i] == 1 ? 0 : s;
    s *= in[i];
  }
  std::vector<std::int64_t> map(static_cast<std::size_t>(numel(out)));
  std::vector<std::int64_t> idx(rank, 0);
  std::int64_t src = 0;
  for (auto& m : map) {
    m = src;
    for (std::size_t i = rank; i-- > 0;) {
      ++idx[i];
      src += in_stride[i];
      if (idx[i] < out[i]) break;
      src -= in_stride[i] * idx[i];
      idx[i] = 0;
    }
  }
  return map;
}

std::vector<std::int64_t> maxpool2_argmax(const Tensor& x) {
  require_rank(x, 4, "maxpool2");
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(Errc::ShapeError, to_string(x.shape()), "maxpool2 needs even spatial dims");
  }
  const auto oh = h / 2, ow = w / 2;
  std::vector<std::int64_t> arg(static_cast<std::size_t>(n * c * oh * ow));
  std::size_t o = 0;
  for (std::int64_t plane = 0; plane < n * c; ++plane) {
    const std::int64_t base = plane * h * w;
    for (std::int64_t i = 0; i < oh; ++i) {
      for (std::int64_t j = 0; j < ow; ++j) {
        std::int64_t best = base + (2 * i) * w + 2 * j;
        for (std::int64_t di = 0; di < 2; ++di) {
          for (std::int64_t dj = 0; dj < 2; ++dj) {
            const std::int64_t k = base + (2 * i + di) * w + (2 * j + dj);
            if (x[k] > x[best]) best = k;
          }
        }
        arg[o++] = best;
      }
    }
  }
  return arg;
}

}  // namespace detail

Tensor apply_unary(UnaryKind kind, const Tensor& x) {
  Tensor out(x.shape());
  auto in = x.data();
  auto dst = out.data();
  switch (kind) {
    case UnaryKind::relu:
      for (std::size_t i = 0; i < in.size(); ++i) dst[i] = in[i] > 0.0f ? in[i] : 0.0f;
      break;
    case UnaryKind::sigmoid:
      for (std::size_t i = 0; i < in.size(); ++i) {
        // Split by sign so exp never overflows.
        const float v = in[i];
        if (v >= 0.0f) {
          dst[i] = 1.0f / (1.0f + std::exp(-v));
        } else {
          const float e = std::exp(v);
          dst[i] = e / (1.0f + e);
        }
      }
      break;
    case UnaryKind::neg:
      for (std::size_t i = 0; i < in.size(); ++i) dst[i] = -in[i];
      break;
    case UnaryKind::exp:
      for (std::size_t i = 0; i < in.size(); ++i) dst[i] = std::exp(in[i]);
      break;
    case UnaryKind::log:
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (!(in[i] > 0.0f)) throw Error(Errc::DomainError, std::to_string(in[i]), "log of non-positive value");
        dst[i] = std::log(in[i]);
      }
      break;
  }
  return out;
}

Tensor clamp_min(const Tensor& x, float lo) {
  Tensor out(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) out[i] = x[i] < lo ? lo : x[i];
  return out;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const auto rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw Error(Errc::BroadcastError, to_string(a) + " vs " + to_string(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

namespace {

template <class Op>
Tensor binary_map(const Tensor& a, const Tensor& b, Op op) {
  if (a.shape() == b.shape()) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
    return out;
  }
  const Shape shape = broadcast_shape(a.shape(), b.shape());
  Tensor out(shape);
  if (b.size() == 1) {
    const float bv = b[0];
    const auto ia = detail::broadcast_index_map(shape, a.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = op(a[ia[i]], bv);
    return out;
  }
  const auto ia = detail::broadcast_index_map(shape, a.shape());
  const auto ib = detail::broadcast_index_map(shape, b.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = op(a[ia[i]], b[ib[i]]);
  return out;
}

}  // namespace

Tensor apply_binary(BinaryKind kind, const Tensor& a, const Tensor& b) {
  switch (kind) {
    case BinaryKind::add: return binary_map(a, b, [](float x, float y) { return x + y; });
    case BinaryKind::sub: return binary_map(a, b, [](float x, float y) { return x - y; });
    case BinaryKind::mul: return binary_map(a, b, [](float x, float y) { return x * y; });
    case BinaryKind::div: return binary_map(a, b, [](float x, float y) { return x / y; });
  }
  return {};
}

Tensor sum_to_shape(const Tensor& grad, const Shape& target) {
  if (grad.shape() == target) return grad;
  Tensor out(target);
  const auto map = detail::broadcast_index_map(grad.shape(), target);
  for (std::int64_t i = 0; i < grad.size(); ++i) out[map[i]] += grad[i];
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw Error(Errc::ShapeError, to_string(a.shape()) + "·" + to_string(b.shape()), "inner dimensions differ");
  }
  Tensor out({a.dim(0), b.dim(1)});
  MatrixMap(out.data().data(), a.dim(0), b.dim(1)).noalias() =
      ConstMatrixMap(a.data().data(), a.dim(0), a.dim(1)) * ConstMatrixMap(b.data().data(), b.dim(0), b.dim(1));
  return out;
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  Tensor out({x.dim(1), x.dim(0)});
  MatrixMap(out.data().data(), x.dim(1), x.dim(0)) = ConstMatrixMap(x.data().data(), x.dim(0), x.dim(1)).transpose();
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias, Conv2dOptions opts) {
  require_rank(x, 4, "conv2d input");
  require_rank(w, 4, "conv2d weight");
  const auto n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const auto cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const auto s = opts.stride, p = opts.padding;
  if (s <= 0 || p < 0) throw Error(Errc::ShapeError, "", "stride must be positive and padding non-negative");
  if (w.dim(1) != cin) {
    throw Error(Errc::ShapeError, to_string(w.shape()), "weight expects " + std::to_string(w.dim(1)) +
                                                            " input channels, got " + std::to_string(cin));
  }
  if (h + 2 * p < kh || wd + 2 * p < kw) {
    throw Error(Errc::ShapeError, to_string(x.shape()), "kernel larger than padded input");
  }
  if (bias && (bias->rank() != 1 || bias->dim(0) != cout)) {
    throw Error(Errc::ShapeError, to_string(bias->shape()), "bias must be [Cout]");
  }
  const auto oh = (h + 2 * p - kh) / s + 1;
  const auto ow = (wd + 2 * p - kw) / s + 1;
  Tensor out({n, cout, oh, ow});
  float* dst = out.data().data();
  const float* src = x.data().data();
  const float* ker = w.data().data();
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t co = 0; co < cout; ++co) {
      const float bv = bias ? (*bias)[co] : 0.0f;
      for (std::int64_t i = 0; i < oh; ++i) {
        for (std::int64_t j = 0; j < ow; ++j) {
          float acc = bv;
          for (std::int64_t ci = 0; ci < cin; ++ci) {
            const float* plane = src + ((b * cin + ci) * h) * wd;
            const float* kplane = ker + ((co * cin + ci) * kh) * kw;
            for (std::int64_t u = 0; u < kh; ++u) {
              const std::int64_t y = i * s + u - p;
              if (y < 0 || y >= h) continue;
              for (std::int64_t v = 0; v < kw; ++v) {
                const std::int64_t xx = j * s + v - p;
                if (xx < 0 || xx >= wd) continue;
                acc += plane[y * wd + xx] * kplane[u * kw + v];
              }
            }
          }
          dst[((b * cout + co) * oh + i) * ow + j] = acc;
        }
      }
    }
  }
  return out;
}

Tensor pool_or_resize(ResizeKind kind, const Tensor& x) {
  require_rank(x, 4, "pool_or_resize");
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (kind == ResizeKind::maxpool2) {
    const auto arg = detail::maxpool2_argmax(x);
    Tensor out({n, c, h / 2, w / 2});
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = x[arg[static_cast<std::size_t>(i)]];
    return out;
  }
  Tensor out({n, c, 2 * h, 2 * w});
  std::int64_t o = 0;
  for (std::int64_t plane = 0; plane < n * c; ++plane) {
    for (std::int64_t i = 0; i < 2 * h; ++i) {
      for (std::int64_t j = 0; j < 2 * w; ++j) out[o++] = x[plane * h * w + (i / 2) * w + (j / 2)];
    }
  }
  return out;
}

Tensor reduce(ReduceKind kind, const Tensor& x, const Axes& axes) {
  const auto mask = detail::reduced_axes_mask(axes, x.rank());
  const auto map = detail::reduce_index_map(x.shape(), mask);
  Tensor out(detail::reduced_shape(x.shape(), mask));
  if (kind == ReduceKind::max) {
    std::vector<bool> seen(static_cast<std::size_t>(out.size()), false);
    for (std::int64_t i = 0; i < x.size(); ++i) {
      const auto o = map[static_cast<std::size_t>(i)];
      if (!seen[o] || x[i] > out[o]) {
        out[o] = x[i];
        seen[o] = true;
      }
    }
    return out;
  }
  // Accumulate in double so sums of many float32 terms stay accurate.
  std::vector<double> acc(static_cast<std::size_t>(out.size()), 0.0);
  for (std::int64_t i = 0; i < x.size(); ++i) acc[map[static_cast<std::size_t>(i)]] += x[i];
  const double count = out.size() ? static_cast<double>(x.size()) / static_cast<double>(out.size()) : 1.0;
  for (std::int64_t o = 0; o < out.size(); ++o) {
    out[o] = static_cast<float>(kind == ReduceKind::mean ? acc[o] / count : acc[o]);
  }
  return out;
}

Tensor softmax(const Tensor& x, std::int64_t axis) {
  const auto a = detail::normalize_axis(axis, x.rank());
  std::int64_t outer = 1, inner = 1;
  for (std::int64_t i = 0; i < a; ++i) outer *= x.shape()[i];
  for (std::int64_t i = a + 1; i < x.rank(); ++i) inner *= x.shape()[i];
  const auto n = x.shape()[a];
  Tensor out(x.shape());
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const std::int64_t base = o * n * inner + in;
      float mx = x[base];
      for (std::int64_t k = 1; k < n; ++k) mx = std::max(mx, x[base + k * inner]);
      double total = 0.0;
      for (std::int64_t k = 0; k < n; ++k) {
        const float e = std::exp(x[base + k * inner] - mx);
        out[base + k * inner] = e;
        total += e;
      }
      for (std::int64_t k = 0; k < n; ++k) {
        out[base + k * inner] = static_cast<float>(out[base + k * inner] / total);
      }
    }
  }
  return out;
}

Tensor reshape(const Tensor& x, const Shape& shape) { return x.reshaped(shape); }

Tensor concat(std::span<const Tensor> inputs, std::int64_t axis) {
  if (inputs.empty()) throw Error(Errc::ShapeError, "", "concat of zero tensors");
  const auto rank = inputs[0].rank();
  const auto a = detail::normalize_axis(axis, rank);
  Shape shape = inputs[0].shape();
  shape[a] = 0;
  for (const auto& t : inputs) {
    bool ok = t.rank() == rank;
    for (std::int64_t i = 0; ok && i < rank; ++i) ok = i == a || t.shape()[i] == inputs[0].shape()[i];
    if (!ok) {
      throw Error(Errc::ShapeError, to_string(t.shape()),
                  "concat along axis " + std::to_string(a) + " with " + to_string(inputs[0].shape()));
    }
    shape[a] += t.shape()[a];
  }
  std::int64_t outer = 1, inner = 1;
  for (std::int64_t i = 0; i < a; ++i) outer *= shape[i];
  for (std::int64_t i = a + 1; i < rank; ++i) inner *= shape[i];
  Tensor out(shape);
  float* dst = out.data().data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (const auto& t : inputs) {
      const auto chunk = t.shape()[a] * inner;
      std::copy_n(t.data().data() + o * chunk, chunk, dst);
      dst += chunk;
    }
  }
  return out;
}

}  // namespace ember
