#include "ember/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "ember/error.hpp"
#include "ember/io.hpp"

namespace ember {

Record TransformChain::operator()(const Record& r) const {
  Record out = r;
  for (const auto& stage : stages_) out = stage(out);
  return out;
}

TransformChain compose(std::vector<TransformChain> parts) {
  std::vector<Transform> stages;
  for (auto& part : parts) {
    for (const auto& s : part.stages()) stages.push_back(s);
  }
  return TransformChain(std::move(stages));
}

namespace {

const Tensor& field_tensor(const Record& r, const std::string& name) {
  const Value* v = r.find(name);
  if (!v) throw Error(Errc::MissingField, name);
  if (!v->is_tensor()) throw Error(Errc::NotATensor, name, std::string("field holds ") + std::string(v->kind_name()));
  return v->tensor();
}

// Applies a tensor function to every declared field.
Transform tensor_transform(std::string name, std::vector<std::string> fields,
                           std::function<Tensor(const Tensor&, const std::string&)> fn) {
  auto declared = fields;
  return Transform(std::move(name), std::move(declared), [fields = std::move(fields), fn = std::move(fn)](const Record& r) {
    Record out = r;
    for (const auto& f : fields) out.set(f, fn(field_tensor(r, f), f));
    return out;
  });
}

void check_target(const Shape& target) {
  for (auto d : target) {
    if (d <= 0) throw Error(Errc::ConfigError, to_string(target), "target dimensions must be positive");
  }
}

void check_rank(const Tensor& x, const Shape& target, const std::string& field) {
  if (x.rank() != static_cast<std::int64_t>(target.size())) {
    throw Error(Errc::RankMismatch, field, "tensor " + to_string(x.shape()) + " vs target " + to_string(target));
  }
}

// Resamples one axis. `outer` x `n` x `inner` view of the source.
Tensor resample_axis(const Tensor& x, std::size_t axis, std::int64_t target, ResampleMode mode) {
  const auto n = x.shape()[axis];
  if (n == target) return x;
  std::int64_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.shape()[i];
  for (std::size_t i = axis + 1; i < x.shape().size(); ++i) inner *= x.shape()[i];
  Shape shape = x.shape();
  shape[axis] = target;
  Tensor out(shape);
  const double scale = static_cast<double>(n) / static_cast<double>(target);
  for (std::int64_t d = 0; d < target; ++d) {
    const double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    std::int64_t lo, hi;
    double frac = 0.0;
    if (mode == ResampleMode::nearest) {
      lo = hi = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(src + 0.5)), 0, n - 1);
    } else {
      const double c = std::clamp(src, 0.0, static_cast<double>(n - 1));
      lo = static_cast<std::int64_t>(std::floor(c));
      hi = std::min(lo + 1, n - 1);
      frac = c - static_cast<double>(lo);
    }
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t i = 0; i < inner; ++i) {
        const double a = x[(o * n + lo) * inner + i];
        const double b = x[(o * n + hi) * inner + i];
        out[(o * target + d) * inner + i] = static_cast<float>(frac == 0.0 ? a : a + (b - a) * frac);
      }
    }
  }
  return out;
}

// Copies the overlap of `src` into `dst` where dst index = src index + offset per axis.
void copy_window(const Tensor& src, Tensor& dst, const std::vector<std::int64_t>& offset) {
  const auto rank = src.shape().size();
  std::vector<std::int64_t> idx(rank, 0);
  for (std::int64_t e = 0; e < src.size(); ++e) {
    std::int64_t flat = 0;
    bool inside = true;
    for (std::size_t a = 0; a < rank; ++a) {
      const auto t = idx[a] + offset[a];
      if (t < 0 || t >= dst.shape()[a]) {
        inside = false;
        break;
      }
      flat = flat * dst.shape()[a] + t;
    }
    if (inside) dst[flat] = src[e];
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < src.shape()[a]) break;
      idx[a] = 0;
    }
  }
}

}  // namespace

ResampleMode parse_resample_mode(const std::string& mode) {
  if (mode == "nearest") return ResampleMode::nearest;
  if (mode == "linear") return ResampleMode::linear;
  throw Error(Errc::BadMode, mode, "expected \"nearest\" or \"linear\"");
}

Tensor resample_tensor(const Tensor& x, const Shape& target, ResampleMode mode) {
  check_target(target);
  check_rank(x, target, "tensor");
  Tensor out = x;
  for (std::size_t a = 0; a < target.size(); ++a) out = resample_axis(out, a, target[a], mode);
  return out;
}

Tensor crop_tensor(const Tensor& x, const Shape& target) {
  check_target(target);
  check_rank(x, target, "tensor");
  std::vector<std::int64_t> offset(target.size());
  for (std::size_t a = 0; a < target.size(); ++a) {
    if (target[a] > x.shape()[a]) {
      throw Error(Errc::TargetTooLarge, std::to_string(a), std::to_string(target[a]) + " > " + std::to_string(x.shape()[a]));
    }
    offset[a] = -((x.shape()[a] - target[a]) / 2);
  }
  Tensor out(target);
  copy_window(x, out, offset);
  return out;
}

Tensor pad_tensor(const Tensor& x, const Shape& target, float value) {
  check_target(target);
  check_rank(x, target, "tensor");
  std::vector<std::int64_t> offset(target.size());
  for (std::size_t a = 0; a < target.size(); ++a) {
    if (target[a] < x.shape()[a]) {
      throw Error(Errc::TargetTooSmall, std::to_string(a), std::to_string(target[a]) + " < " + std::to_string(x.shape()[a]));
    }
    offset[a] = (target[a] - x.shape()[a]) / 2;
  }
  Tensor out = Tensor::full(target, value);
  copy_window(x, out, offset);
  return out;
}

Transform normalize_fixed(std::vector<std::string> fields, double mean, double std) {
  if (!(std > 0.0)) throw Error(Errc::ConfigError, "std", "standard deviation must be positive");
  return tensor_transform("NormalizeFixed", std::move(fields), [mean, std](const Tensor& x, const std::string&) {
    Tensor out(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>((x[i] - mean) / std);
    return out;
  });
}

Transform resample_to_shape(std::vector<std::string> fields, Shape target, ResampleMode mode) {
  check_target(target);
  return tensor_transform("ResampleToShape", std::move(fields), [target, mode](const Tensor& x, const std::string& f) {
    check_rank(x, target, f);
    return resample_tensor(x, target, mode);
  });
}

Transform crop_center(std::vector<std::string> fields, Shape target) {
  check_target(target);
  return tensor_transform("CropCenter", std::move(fields), [target](const Tensor& x, const std::string& f) {
    check_rank(x, target, f);
    return crop_tensor(x, target);
  });
}

Transform pad_to_shape(std::vector<std::string> fields, Shape target, double value) {
  check_target(target);
  return tensor_transform("PadToShape", std::move(fields), [target, value](const Tensor& x, const std::string& f) {
    check_rank(x, target, f);
    return pad_tensor(x, target, static_cast<float>(value));
  });
}

Transform threshold(std::string field, double t) {
  return tensor_transform("Threshold", {std::move(field)}, [t](const Tensor& x, const std::string&) {
    Tensor out(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) out[i] = x[i] > t ? 1.0f : 0.0f;
    return out;
  });
}

Transform one_hot(std::string field, std::int64_t num_classes) {
  if (num_classes < 1) throw Error(Errc::ConfigError, "num_classes", "must be positive");
  return tensor_transform("OneHot", {std::move(field)}, [num_classes](const Tensor& x, const std::string& f) {
    Shape shape{num_classes};
    shape.insert(shape.end(), x.shape().begin(), x.shape().end());
    Tensor out(shape);
    for (std::int64_t i = 0; i < x.size(); ++i) {
      const float v = x[i];
      if (!(v >= 0.0f) || v != std::floor(v) || v >= static_cast<float>(num_classes)) {
        throw Error(Errc::ClassOutOfRange, std::to_string(v), "field " + f + " has " + std::to_string(num_classes) + " classes");
      }
      out[static_cast<std::int64_t>(v) * x.size() + i] = 1.0f;
    }
    return out;
  });
}

Transform add_channel_dim(std::string field) {
  return tensor_transform("AddChannelDim", {std::move(field)}, [](const Tensor& x, const std::string&) {
    Shape shape{1};
    shape.insert(shape.end(), x.shape().begin(), x.shape().end());
    return x.reshaped(shape);
  });
}

Transform rename_field(std::string from, std::string to) {
  if (to.empty()) throw Error(Errc::ConfigError, "to", "new field name must be non-empty");
  return Transform("Rename", {from, to}, [from, to](const Record& r) {
    if (!r.contains(from)) throw Error(Errc::MissingField, from);
    if (from == to) return r;
    if (r.contains(to)) throw Error(Errc::NameCollision, to);
    Record out;
    for (const auto& [name, value] : r) out.insert(name == from ? to : name, value);
    return out;
  });
}

Transform keep_only(std::vector<std::string> fields) {
  auto declared = fields;
  return Transform("KeepOnly", std::move(declared), [fields = std::move(fields)](const Record& r) {
    for (const auto& f : fields) {
      if (!r.contains(f)) throw Error(Errc::MissingField, f);
    }
    Record out;
    for (const auto& [name, value] : r) {
      if (std::find(fields.begin(), fields.end(), name) != fields.end()) out.insert(name, value);
    }
    return out;
  });
}

namespace {

void flatten_numeric(const Value& v, Shape& shape, std::vector<float>& data, std::size_t depth, const std::string& field) {
  if (v.is_scalar() || v.is_int()) {
    if (depth != shape.size()) throw Error(Errc::ShapeMismatch, field, "ragged numeric list");
    data.push_back(static_cast<float>(v.scalar()));
    return;
  }
  if (!v.is_list()) throw Error(Errc::NotATensor, field, std::string("cannot convert ") + std::string(v.kind_name()));
  const auto& items = v.list();
  if (items.empty()) throw Error(Errc::ShapeMismatch, field, "empty list");
  if (depth == shape.size()) {
    if (!data.empty()) throw Error(Errc::ShapeMismatch, field, "ragged numeric list");
    shape.push_back(static_cast<std::int64_t>(items.size()));
  } else if (shape[depth] != static_cast<std::int64_t>(items.size())) {
    throw Error(Errc::ShapeMismatch, field, "ragged numeric list");
  }
  for (const auto& e : items) flatten_numeric(e, shape, data, depth + 1, field);
}

}  // namespace

Transform cast_to_tensor(std::string field) {
  return Transform("CastToTensor", {field}, [field](const Record& r) {
    const Value& v = r.at(field);
    if (v.is_tensor()) return r;
    Shape shape;
    std::vector<float> data;
    flatten_numeric(v, shape, data, 0, field);
    Record out = r;
    out.set(field, Tensor(std::move(shape), std::move(data)));
    return out;
  });
}

Transform load_nifti(std::vector<std::string> fields, std::filesystem::path data_root) {
  std::vector<std::string> declared;
  for (const auto& f : fields) {
    declared.push_back(f);
    declared.push_back(f + "_meta");
  }
  return Transform("LoadNifti", std::move(declared), [fields = std::move(fields), root = std::move(data_root)](const Record& r) {
    Record out = r;
    for (const auto& f : fields) {
      const Value* v = r.find(f);
      if (!v) throw Error(Errc::MissingField, f);
      if (!v->is_text()) throw Error(Errc::NotAPath, f, std::string("field holds ") + std::string(v->kind_name()));
      const std::filesystem::path p(v->text());
      try {
        auto [tensor, meta] = read_nifti(p.is_absolute() ? p : root / p);
        ValueList spacing;
        for (double s : meta.spacing) spacing.emplace_back(s);
        out.set(f, std::move(tensor));
        out.set(f + "_meta", std::move(spacing));
      } catch (const Error& e) {
        throw e.with_context("field " + f);
      }
    }
    return out;
  });
}

}  // namespace ember
