#include "ember/autodiff.hpp"

#include <cmath>

#include "ember/error.hpp"

namespace ember {

const Tensor* Gradients::find(Var v) const {
  const auto i = static_cast<std::size_t>(v.id());
  if (i >= grads_.size() || !grads_[i]) return nullptr;
  return &*grads_[i];
}

Tensor Gradients::of(Var v) const {
  if (const Tensor* g = find(v)) return *g;
  return Tensor::zeros(v.shape());
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), {}, {}, requires_grad});
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node{std::move(value), {}, {}, false};
  if (grad_enabled_) {
    for (const auto& in : inputs) {
      if (&in.tape() != this) throw Error(Errc::BadParam, "", "operands live on different tapes");
      node.inputs.push_back(in.id());
      node.requires_grad = node.requires_grad || in.requires_grad();
    }
    if (node.requires_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Gradients Tape::backward(Var root) const {
  if (root.value().rank() != 0) {
    throw Error(Errc::NonScalarRoot, to_string(root.shape()), "backward needs a scalar root");
  }
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[static_cast<std::size_t>(root.id())] = Tensor::scalar(1.0f);
  for (auto id = static_cast<std::size_t>(root.id()) + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!grads[id] || !node.backward) continue;
    auto input_grads = node.backward(*grads[id]);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const auto in = static_cast<std::size_t>(node.inputs[k]);
      if (!nodes_[in].requires_grad) continue;
      auto& slot = grads[in];
      if (!slot) {
        slot = std::move(input_grads[k]);
      } else {
        // Fan-out: contributions from every consumer add up.
        auto dst = slot->data();
        auto src = input_grads[k].data();
        for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += src[e];
      }
    }
  }
  return Gradients(std::move(grads));
}

namespace {

template <class F>
Tensor map_pair(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

Var apply_unary(UnaryKind kind, Var x) {
  Tensor y = apply_unary(kind, x.value());
  Tape& tape = x.tape();
  switch (kind) {
    case UnaryKind::relu:
      return tape.record(std::move(y), {x}, [xv = x.value()](const Tensor& g) {
        return std::vector<Tensor>{map_pair(g, xv, [](float gi, float xi) { return xi > 0.0f ? gi : 0.0f; })};
      });
    case UnaryKind::sigmoid: {
      Tensor saved = y;
      return tape.record(std::move(y), {x}, [s = std::move(saved)](const Tensor& g) {
        return std::vector<Tensor>{map_pair(g, s, [](float gi, float si) { return gi * si * (1.0f - si); })};
      });
    }
    case UnaryKind::neg:
      return tape.record(std::move(y), {x}, [](const Tensor& g) {
        return std::vector<Tensor>{apply_unary(UnaryKind::neg, g)};
      });
    case UnaryKind::exp: {
      Tensor saved = y;
      return tape.record(std::move(y), {x}, [e = std::move(saved)](const Tensor& g) {
        return std::vector<Tensor>{map_pair(g, e, [](float gi, float ei) { return gi * ei; })};
      });
    }
    case UnaryKind::log:
      return tape.record(std::move(y), {x}, [xv = x.value()](const Tensor& g) {
        return std::vector<Tensor>{map_pair(g, xv, [](float gi, float xi) { return gi / xi; })};
      });
  }
  return {};
}

Var relu(Var x) { return apply_unary(UnaryKind::relu, x); }
Var sigmoid(Var x) { return apply_unary(UnaryKind::sigmoid, x); }
Var neg(Var x) { return apply_unary(UnaryKind::neg, x); }
Var exp(Var x) { return apply_unary(UnaryKind::exp, x); }
Var log(Var x) { return apply_unary(UnaryKind::log, x); }

Var clamp_min(Var x, float lo) {
  return x.tape().record(clamp_min(x.value(), lo), {x}, [xv = x.value(), lo](const Tensor& g) {
    return std::vector<Tensor>{map_pair(g, xv, [lo](float gi, float xi) { return xi < lo ? 0.0f : gi; })};
  });
}

Var apply_binary(BinaryKind kind, Var a, Var b) {
  Tensor y = apply_binary(kind, a.value(), b.value());
  const Shape sa = a.shape(), sb = b.shape();
  Tape& tape = a.tape();
  switch (kind) {
    case BinaryKind::add:
      return tape.record(std::move(y), {a, b}, [sa, sb](const Tensor& g) {
        return std::vector<Tensor>{sum_to_shape(g, sa), sum_to_shape(g, sb)};
      });
    case BinaryKind::sub:
      return tape.record(std::move(y), {a, b}, [sa, sb](const Tensor& g) {
        return std::vector<Tensor>{sum_to_shape(g, sa), sum_to_shape(apply_unary(UnaryKind::neg, g), sb)};
      });
    case BinaryKind::mul:
      return tape.record(std::move(y), {a, b}, [av = a.value(), bv = b.value(), sa, sb](const Tensor& g) {
        return std::vector<Tensor>{sum_to_shape(apply_binary(BinaryKind::mul, g, bv), sa),
                                   sum_to_shape(apply_binary(BinaryKind::mul, g, av), sb)};
      });
    case BinaryKind::div:
      return tape.record(std::move(y), {a, b}, [av = a.value(), bv = b.value(), sa, sb](const Tensor& g) {
        // d(a/b)/da = 1/b, d(a/b)/db = -a/b^2
        Tensor ga = apply_binary(BinaryKind::div, g, bv);
        Tensor gb = apply_binary(BinaryKind::mul, ga, apply_binary(BinaryKind::div, av, bv));
        return std::vector<Tensor>{sum_to_shape(ga, sa), sum_to_shape(apply_unary(UnaryKind::neg, gb), sb)};
      });
  }
  return {};
}

Var add(Var a, Var b) { return apply_binary(BinaryKind::add, a, b); }
Var sub(Var a, Var b) { return apply_binary(BinaryKind::sub, a, b); }
Var mul(Var a, Var b) { return apply_binary(BinaryKind::mul, a, b); }
Var div(Var a, Var b) { return apply_binary(BinaryKind::div, a, b); }

Var operator+(Var a, float b) { return add(a, a.tape().constant(Tensor::scalar(b))); }
Var operator-(float a, Var b) { return sub(b.tape().constant(Tensor::scalar(a)), b); }
Var operator*(float a, Var b) { return mul(b.tape().constant(Tensor::scalar(a)), b); }

Var matmul(Var a, Var b) {
  return a.tape().record(matmul(a.value(), b.value()), {a, b}, [av = a.value(), bv = b.value()](const Tensor& g) {
    return std::vector<Tensor>{matmul(g, transpose(bv)), matmul(transpose(av), g)};
  });
}

Var transpose(Var x) {
  return x.tape().record(transpose(x.value()), {x}, [](const Tensor& g) {
    return std::vector<Tensor>{transpose(g)};
  });
}

Var conv2d(Var x, Var w, std::optional<Var> bias, Conv2dOptions opts) {
  std::optional<Tensor> bias_value;
  std::vector<Var> inputs{x, w};
  if (bias) {
    bias_value = bias->value();
    inputs.push_back(*bias);
  }
  Tensor y = conv2d(x.value(), w.value(), bias_value, opts);
  const bool has_bias = bias.has_value();
  return x.tape().record(
      std::move(y), std::move(inputs), [xv = x.value(), wv = w.value(), opts, has_bias](const Tensor& g) {
        const auto n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), wd = xv.dim(3);
        const auto cout = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
        const auto oh = g.dim(2), ow = g.dim(3);
        const auto s = opts.stride, p = opts.padding;
        Tensor gx(xv.shape()), gw(wv.shape()), gb({cout});
        const float* src = xv.data().data();
        const float* ker = wv.data().data();
        float* dx = gx.data().data();
        float* dw = gw.data().data();
        for (std::int64_t b = 0; b < n; ++b) {
          for (std::int64_t co = 0; co < cout; ++co) {
            for (std::int64_t i = 0; i < oh; ++i) {
              for (std::int64_t j = 0; j < ow; ++j) {
                const float go = g[((b * cout + co) * oh + i) * ow + j];
                gb[co] += go;
                if (go == 0.0f) continue;
                for (std::int64_t ci = 0; ci < cin; ++ci) {
                  const std::int64_t plane = ((b * cin + ci) * h) * wd;
                  const std::int64_t kplane = ((co * cin + ci) * kh) * kw;
                  for (std::int64_t u = 0; u < kh; ++u) {
                    const std::int64_t y = i * s + u - p;
                    if (y < 0 || y >= h) continue;
                    for (std::int64_t v = 0; v < kw; ++v) {
                      const std::int64_t xx = j * s + v - p;
                      if (xx < 0 || xx >= wd) continue;
                      dx[plane + y * wd + xx] += go * ker[kplane + u * kw + v];
                      dw[kplane + u * kw + v] += go * src[plane + y * wd + xx];
                    }
                  }
                }
              }
            }
          }
        }
        std::vector<Tensor> grads{std::move(gx), std::move(gw)};
        if (has_bias) grads.push_back(std::move(gb));
        return grads;
      });
}

Var pool_or_resize(ResizeKind kind, Var x) {
  Tape& tape = x.tape();
  if (kind == ResizeKind::maxpool2) {
    auto arg = detail::maxpool2_argmax(x.value());
    Tensor y = pool_or_resize(kind, x.value());
    return tape.record(std::move(y), {x}, [arg = std::move(arg), shape = x.shape()](const Tensor& g) {
      Tensor gx(shape);
      for (std::int64_t i = 0; i < g.size(); ++i) gx[arg[static_cast<std::size_t>(i)]] += g[i];
      return std::vector<Tensor>{std::move(gx)};
    });
  }
  return tape.record(pool_or_resize(kind, x.value()), {x}, [shape = x.shape()](const Tensor& g) {
    const auto h = shape[2], w = shape[3];
    Tensor gx(shape);
    std::int64_t o = 0;
    for (std::int64_t plane = 0; plane < shape[0] * shape[1]; ++plane) {
      for (std::int64_t i = 0; i < 2 * h; ++i) {
        for (std::int64_t j = 0; j < 2 * w; ++j) gx[plane * h * w + (i / 2) * w + (j / 2)] += g[o++];
      }
    }
    return std::vector<Tensor>{std::move(gx)};
  });
}

Var maxpool2(Var x) { return pool_or_resize(ResizeKind::maxpool2, x); }
Var upsample_nearest2(Var x) { return pool_or_resize(ResizeKind::upsample_nearest2, x); }

Var reduce(ReduceKind kind, Var x, const Axes& axes) {
  const auto& xv = x.value();
  const auto mask = detail::reduced_axes_mask(axes, xv.rank());
  auto map = detail::reduce_index_map(xv.shape(), mask);
  Tensor y = reduce(kind, xv, axes);
  Tape& tape = x.tape();
  if (kind == ReduceKind::max) {
    // Route the gradient to the first maximum of each group.
    std::vector<std::int64_t> arg(static_cast<std::size_t>(y.size()), -1);
    for (std::int64_t i = 0; i < xv.size(); ++i) {
      auto& a = arg[static_cast<std::size_t>(map[static_cast<std::size_t>(i)])];
      if (a < 0 && xv[i] == y[map[static_cast<std::size_t>(i)]]) a = i;
    }
    return tape.record(std::move(y), {x}, [arg = std::move(arg), shape = xv.shape()](const Tensor& g) {
      Tensor gx(shape);
      for (std::int64_t o = 0; o < g.size(); ++o) {
        if (arg[static_cast<std::size_t>(o)] >= 0) gx[arg[static_cast<std::size_t>(o)]] += g[o];
      }
      return std::vector<Tensor>{std::move(gx)};
    });
  }
  const float scale =
      kind == ReduceKind::mean ? static_cast<float>(y.size()) / static_cast<float>(xv.size()) : 1.0f;
  return tape.record(std::move(y), {x}, [map = std::move(map), shape = xv.shape(), scale](const Tensor& g) {
    Tensor gx(shape);
    for (std::int64_t i = 0; i < gx.size(); ++i) gx[i] = g[map[static_cast<std::size_t>(i)]] * scale;
    return std::vector<Tensor>{std::move(gx)};
  });
}

Var sum(Var x, const Axes& axes) { return reduce(ReduceKind::sum, x, axes); }
Var mean(Var x, const Axes& axes) { return reduce(ReduceKind::mean, x, axes); }
Var max(Var x, const Axes& axes) { return reduce(ReduceKind::max, x, axes); }

Var softmax(Var x, std::int64_t axis) {
  const auto a = detail::normalize_axis(axis, x.value().rank());
  Tensor y = softmax(x.value(), a);
  Tensor saved = y;
  return x.tape().record(std::move(y), {x}, [s = std::move(saved), a](const Tensor& g) {
    // dx = s * (g - sum(g * s) along axis)
    std::int64_t outer = 1, inner = 1;
    for (std::int64_t i = 0; i < a; ++i) outer *= s.shape()[i];
    for (std::int64_t i = a + 1; i < s.rank(); ++i) inner *= s.shape()[i];
    const auto n = s.shape()[a];
    Tensor gx(s.shape());
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t in = 0; in < inner; ++in) {
        const std::int64_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::int64_t k = 0; k < n; ++k) dot += g[base + k * inner] * s[base + k * inner];
        for (std::int64_t k = 0; k < n; ++k) {
          const auto e = base + k * inner;
          gx[e] = static_cast<float>(s[e] * (g[e] - dot));
        }
      }
    }
    return std::vector<Tensor>{std::move(gx)};
  });
}

Var reshape(Var x, const Shape& shape) {
  return x.tape().record(reshape(x.value(), shape), {x}, [old = x.shape()](const Tensor& g) {
    return std::vector<Tensor>{g.reshaped(old)};
  });
}

Var concat(std::span<const Var> inputs, std::int64_t axis) {
  if (inputs.empty()) throw Error(Errc::ShapeError, "", "concat of zero tensors");
  std::vector<Tensor> values;
  values.reserve(inputs.size());
  for (const auto& v : inputs) values.push_back(v.value());
  Tensor y = concat(values, axis);
  const auto a = detail::normalize_axis(axis, y.rank());
  std::vector<Shape> shapes;
  for (const auto& v : values) shapes.push_back(v.shape());
  return inputs[0].tape().record(
      std::move(y), std::vector<Var>(inputs.begin(), inputs.end()), [shapes = std::move(shapes), a](const Tensor& g) {
        std::int64_t outer = 1, inner = 1;
        for (std::int64_t i = 0; i < a; ++i) outer *= g.shape()[i];
        for (std::int64_t i = a + 1; i < g.rank(); ++i) inner *= g.shape()[i];
        std::vector<Tensor> grads;
        for (const auto& s : shapes) grads.emplace_back(s);
        const float* src = g.data().data();
        for (std::int64_t o = 0; o < outer; ++o) {
          for (std::size_t k = 0; k < shapes.size(); ++k) {
            const auto chunk = shapes[k][a] * inner;
            std::copy_n(src, chunk, grads[k].data().data() + o * chunk);
            src += chunk;
          }
        }
        return grads;
      });
}

}  // namespace ember
