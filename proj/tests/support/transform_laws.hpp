#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "ember/transforms.hpp"

// Randomized checks of the algebraic laws record transforms must obey.
namespace laws {

using namespace ember;

struct Outcome {
  int cases = 0;
  int failures = 0;
  std::string first_failure;

  void fail(const std::string& what) {
    if (failures++ == 0) first_failure = what;
  }
};

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : gen_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  float real(float lo, float hi) { return std::uniform_real_distribution<float>(lo, hi)(gen_); }

  Shape shape(int rank, int max_dim) {
    Shape s;
    for (int i = 0; i < rank; ++i) s.push_back(uniform(1, max_dim));
    return s;
  }

  Tensor tensor(const Shape& s) {
    Tensor t(s);
    for (auto& v : t.data()) v = real(-3, 3);
    return t;
  }

  Tensor labels(const Shape& s, int classes) {
    Tensor t(s);
    for (auto& v : t.data()) v = static_cast<float>(uniform(0, classes - 1));
    return t;
  }

  // "image" plus a few unrelated fields of every value kind.
  Record record(const Tensor& image) {
    Record r;
    const int extras = uniform(1, 4);
    r.set("image", image);
    for (int i = 0; i < extras; ++i) {
      const std::string name = "extra" + std::to_string(i);
      switch (uniform(0, 4)) {
        case 0: r.set(name, tensor(shape(uniform(0, 3), 3))); break;
        case 1: r.set(name, static_cast<double>(real(-1, 1))); break;
        case 2: r.set(name, uniform(-5, 5)); break;
        case 3: r.set(name, "path/" + std::to_string(uniform(0, 99)) + ".nii"); break;
        default: r.set(name, ValueList{uniform(0, 3), static_cast<double>(real(0, 1))}); break;
      }
    }
    return r;
  }

 private:
  std::mt19937_64 gen_;
};

inline bool outside_fields_identical(const Transform& t, const Record& in, const Record& out) {
  auto declared = [&](const std::string& name) {
    const auto& f = t.declared_fields();
    return std::find(f.begin(), f.end(), name) != f.end();
  };
  for (const auto& [name, value] : in) {
    if (declared(name)) continue;
    const Value* v = out.find(name);
    if (!v || !(*v == value)) return false;
  }
  for (const auto& [name, value] : out) {
    if (!declared(name) && !in.contains(name)) return false;
  }
  return true;
}

// A transform that accepts any record whose "image" has the given shape.
inline Transform random_transform(Generator& g, const Shape& shape) {
  Shape same = shape;
  switch (g.uniform(0, 6)) {
    case 0: return normalize_fixed({"image"}, g.real(-1, 1), g.real(0.5f, 2));
    case 1: return resample_to_shape({"image"}, same, g.uniform(0, 1) ? ResampleMode::nearest : ResampleMode::linear);
    case 2: return threshold("image", g.real(-1, 1));
    case 3: return crop_center({"image"}, same);
    case 4: return pad_to_shape({"image"}, same, 0.0);
    case 5: return cast_to_tensor("image");
    default: return rename_field("image", "image");
  }
}

inline std::string describe(const Shape& s, int k) {
  std::ostringstream os;
  os << "case " << k << " shape " << to_string(s);
  return os.str();
}

inline Outcome check_all(std::uint64_t seed, int cases) {
  Generator g(seed);
  Outcome o;
  for (int k = 0; k < cases; ++k) {
    ++o.cases;
    const Shape shape = g.shape(g.uniform(1, 3), 6);
    const Tensor image = g.tensor(shape);
    const Record r = g.record(image);
    const std::string where = describe(shape, k);

    // Locality and purity of a random transform.
    const Transform t = random_transform(g, shape);
    const Record once = t(r);
    if (!(once == t(r))) o.fail(where + ": " + t.name() + " is not pure");
    if (!outside_fields_identical(t, r, once)) o.fail(where + ": " + t.name() + " touched undeclared fields");

    // Structural transforms keep locality too.
    const Transform chan = add_channel_dim("image");
    if (!outside_fields_identical(chan, r, chan(r))) o.fail(where + ": AddChannelDim touched undeclared fields");
    const Transform ren = rename_field("image", "renamed");
    const Record renamed = ren(r);
    if (!outside_fields_identical(ren, r, renamed)) o.fail(where + ": Rename touched undeclared fields");
    if (!(rename_field("renamed", "image")(renamed) == r)) o.fail(where + ": rename is not invertible");

    // Associativity of composition.
    const Transform a = random_transform(g, shape), b = random_transform(g, shape), c = random_transform(g, shape);
    const Record left = compose({a, compose({b, c})})(r);
    const Record right = compose({compose({a, b}), c})(r);
    if (!(left == right) || !(left == c(b(a(r))))) o.fail(where + ": composition is not associative");

    // Resampling to the source shape is the identity.
    for (auto mode : {ResampleMode::nearest, ResampleMode::linear}) {
      if (!(resample_tensor(image, shape, mode) == image)) o.fail(where + ": resample identity");
    }

    // Cropping back an even-margin pad restores the tensor exactly.
    Shape bigger = shape;
    for (auto& d : bigger) d += 2 * g.uniform(0, 3);
    const Tensor restored = crop_tensor(pad_tensor(image, bigger, g.real(-9, 9)), shape);
    if (!bitwise_equal(restored, image)) o.fail(where + ": crop(pad) round trip");

    // One-hot encoding has exactly one hot class per voxel.
    const int classes = g.uniform(1, 5);
    const Record onehot = one_hot("image", classes)(Record{{"image", g.labels(shape, classes)}});
    const Tensor& oh = onehot.at("image").tensor();
    const std::int64_t voxels = numel(shape);
    for (std::int64_t v = 0; v < voxels; ++v) {
      float sum = 0;
      for (int cl = 0; cl < classes; ++cl) sum += oh[cl * voxels + v];
      if (sum != 1.0f) {
        o.fail(where + ": one-hot sum");
        break;
      }
    }
  }
  return o;
}

}  // namespace laws
