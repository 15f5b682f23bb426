#pragma once

// Double-precision reference implementations used as test oracles. Written
// directly from the operation definitions with explicit multi-index loops;
// nothing here calls into the engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ref {

using Shape = std::vector<std::int64_t>;

struct DTensor {
  Shape shape;
  std::vector<double> v;

  DTensor() = default;
  DTensor(Shape s, std::vector<double> values) : shape(std::move(s)), v(std::move(values)) {}
  explicit DTensor(Shape s) : shape(std::move(s)), v(static_cast<std::size_t>(count(shape)), 0.0) {}

  static std::int64_t count(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::int64_t{1}, std::multiplies<>());
  }
  std::int64_t size() const { return static_cast<std::int64_t>(v.size()); }
};

inline Shape unravel(std::int64_t flat, const Shape& shape) {
  Shape idx(shape.size());
  for (std::size_t i = shape.size(); i-- > 0;) {
    idx[i] = flat % shape[i];
    flat /= shape[i];
  }
  return idx;
}

inline std::int64_t ravel(const Shape& idx, const Shape& shape) {
  std::int64_t flat = 0;
  for (std::size_t i = 0; i < shape.size(); ++i) flat = flat * shape[i] + idx[i];
  return flat;
}

template <class F>
DTensor map(const DTensor& x, F f) {
  DTensor out(x.shape);
  for (std::size_t i = 0; i < x.v.size(); ++i) out.v[i] = f(x.v[i]);
  return out;
}

inline double relu(double x) { return x > 0 ? x : 0; }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Shape broadcast(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::int64_t da = i + a.size() >= r ? a[i + a.size() - r] : 1;
    const std::int64_t db = i + b.size() >= r ? b[i + b.size() - r] : 1;
    if (da != db && da != 1 && db != 1) throw std::invalid_argument("broadcast");
    out[i] = std::max(da, db);
  }
  return out;
}

// Element of `x` addressed by an index into the broadcast shape `out`.
inline double broadcast_get(const DTensor& x, const Shape& out_idx) {
  const std::size_t off = out_idx.size() - x.shape.size();
  Shape idx(x.shape.size());
  for (std::size_t i = 0; i < x.shape.size(); ++i) idx[i] = x.shape[i] == 1 ? 0 : out_idx[i + off];
  return x.v[static_cast<std::size_t>(ravel(idx, x.shape))];
}

template <class F>
DTensor zip(const DTensor& a, const DTensor& b, F f) {
  DTensor out(broadcast(a.shape, b.shape));
  for (std::int64_t i = 0; i < out.size(); ++i) {
    const Shape idx = unravel(i, out.shape);
    out.v[static_cast<std::size_t>(i)] = f(broadcast_get(a, idx), broadcast_get(b, idx));
  }
  return out;
}

inline DTensor matmul(const DTensor& a, const DTensor& b) {
  const auto m = a.shape[0], k = a.shape[1], n = b.shape[1];
  DTensor out({m, n});
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::int64_t t = 0; t < k; ++t) s += a.v[i * k + t] * b.v[t * n + j];
      out.v[i * n + j] = s;
    }
  return out;
}

inline DTensor transpose(const DTensor& a) {
  DTensor out({a.shape[1], a.shape[0]});
  for (std::int64_t i = 0; i < a.shape[0]; ++i)
    for (std::int64_t j = 0; j < a.shape[1]; ++j) out.v[j * a.shape[0] + i] = a.v[i * a.shape[1] + j];
  return out;
}

inline DTensor conv2d(const DTensor& x, const DTensor& w, const DTensor* bias, std::int64_t stride,
                      std::int64_t pad) {
  const auto n = x.shape[0], ci = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const auto co = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  const auto oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  DTensor out({n, co, oh, ow});
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t o = 0; o < co; ++o)
      for (std::int64_t i = 0; i < oh; ++i)
        for (std::int64_t j = 0; j < ow; ++j) {
          double s = bias ? bias->v[o] : 0.0;
          for (std::int64_t c = 0; c < ci; ++c)
            for (std::int64_t u = 0; u < kh; ++u)
              for (std::int64_t q = 0; q < kw; ++q) {
                const auto y = i * stride + u - pad, xx = j * stride + q - pad;
                if (y < 0 || y >= h || xx < 0 || xx >= wd) continue;
                s += x.v[ravel({b, c, y, xx}, x.shape)] * w.v[ravel({o, c, u, q}, w.shape)];
              }
          out.v[ravel({b, o, i, j}, out.shape)] = s;
        }
  return out;
}

inline DTensor maxpool2(const DTensor& x) {
  DTensor out({x.shape[0], x.shape[1], x.shape[2] / 2, x.shape[3] / 2});
  for (std::int64_t e = 0; e < out.size(); ++e) {
    const Shape o = unravel(e, out.shape);
    double m = -INFINITY;
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj)
        m = std::max(m, x.v[ravel({o[0], o[1], 2 * o[2] + di, 2 * o[3] + dj}, x.shape)]);
    out.v[e] = m;
  }
  return out;
}

inline DTensor upsample2(const DTensor& x) {
  DTensor out({x.shape[0], x.shape[1], x.shape[2] * 2, x.shape[3] * 2});
  for (std::int64_t e = 0; e < out.size(); ++e) {
    const Shape o = unravel(e, out.shape);
    out.v[e] = x.v[ravel({o[0], o[1], o[2] / 2, o[3] / 2}, x.shape)];
  }
  return out;
}

enum class Red { sum, mean, max };

// `axes` empty means all axes.
inline DTensor reduce(Red kind, const DTensor& x, std::vector<std::int64_t> axes) {
  if (axes.empty())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(x.shape.size()); ++i) axes.push_back(i);
  std::vector<bool> red(x.shape.size(), false);
  for (auto a : axes) red[a] = true;
  Shape out_shape;
  for (std::size_t i = 0; i < x.shape.size(); ++i)
    if (!red[i]) out_shape.push_back(x.shape[i]);
  DTensor out(out_shape);
  std::vector<std::int64_t> counts(out.v.size(), 0);
  for (std::int64_t e = 0; e < x.size(); ++e) {
    const Shape idx = unravel(e, x.shape);
    Shape oi;
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (!red[i]) oi.push_back(idx[i]);
    const auto o = static_cast<std::size_t>(ravel(oi, out_shape));
    if (kind == Red::max)
      out.v[o] = counts[o] == 0 ? x.v[e] : std::max(out.v[o], x.v[e]);
    else
      out.v[o] += x.v[e];
    ++counts[o];
  }
  if (kind == Red::mean)
    for (std::size_t o = 0; o < out.v.size(); ++o) out.v[o] /= static_cast<double>(counts[o]);
  return out;
}

inline DTensor softmax(const DTensor& x, std::int64_t axis) {
  DTensor out(x.shape);
  for (std::int64_t e = 0; e < x.size(); ++e) {
    Shape idx = unravel(e, x.shape);
    double denom = 0;
    for (std::int64_t k = 0; k < x.shape[axis]; ++k) {
      Shape j = idx;
      j[axis] = k;
      denom += std::exp(x.v[ravel(j, x.shape)]);
    }
    out.v[e] = std::exp(x.v[e]) / denom;
  }
  return out;
}

inline DTensor concat(const std::vector<DTensor>& xs, std::int64_t axis) {
  Shape shape = xs[0].shape;
  shape[axis] = 0;
  for (const auto& x : xs) shape[axis] += x.shape[axis];
  DTensor out(shape);
  for (std::int64_t e = 0; e < out.size(); ++e) {
    Shape idx = unravel(e, shape);
    std::size_t k = 0;
    while (idx[axis] >= xs[k].shape[axis]) idx[axis] -= xs[k++].shape[axis];
    out.v[e] = xs[k].v[ravel(idx, xs[k].shape)];
  }
  return out;
}

// Soft Dice per (sample, class) over trailing spatial axes, averaged.
inline double dice(const DTensor& p, const DTensor& g, double smooth) {
  const auto n = p.shape[0], c = p.shape[1];
  const auto spatial = p.size() / (n * c);
  double total = 0;
  for (std::int64_t s = 0; s < n * c; ++s) {
    double pg = 0, pp = 0, gg = 0;
    for (std::int64_t k = 0; k < spatial; ++k) {
      const double a = p.v[s * spatial + k], b = g.v[s * spatial + k];
      pg += a * b;
      pp += a * a;
      gg += b * b;
    }
    const double den = pp + gg + smooth;
    total += den == 0 ? 1.0 : (2 * pg + smooth) / den;
  }
  return total / static_cast<double>(n * c);
}

inline double cross_entropy(const DTensor& p, const DTensor& onehot) {
  const auto n = p.shape[0];
  double s = 0;
  for (std::int64_t i = 0; i < p.size(); ++i)
    if (onehot.v[i] != 0) s -= onehot.v[i] * std::log(std::max(p.v[i], 1e-7));
  return s / static_cast<double>(n);
}

inline double mse(const DTensor& p, const DTensor& t) {
  double s = 0;
  for (std::int64_t i = 0; i < p.size(); ++i) s += (p.v[i] - t.v[i]) * (p.v[i] - t.v[i]);
  return s / static_cast<double>(p.size());
}

}  // namespace ref
