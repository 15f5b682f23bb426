#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ember/record.hpp"
#include "ember/tensor.hpp"

namespace ember {

/// A pure Record -> Record function doing exactly one thing to its declared
/// fields. Every other field passes through untouched.
class Transform {
 public:
  using Fn = std::function<Record(const Record&)>;

  Transform(std::string name, std::vector<std::string> declared_fields, Fn fn)
      : name_(std::move(name)), fields_(std::move(declared_fields)), fn_(std::move(fn)) {}

  Record operator()(const Record& r) const { return fn_(r); }

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& declared_fields() const noexcept { return fields_; }

 private:
  std::string name_;
  std::vector<std::string> fields_;
  Fn fn_;
};

/// Transforms applied left to right.
class TransformChain {
 public:
  TransformChain() = default;
  TransformChain(Transform t) : stages_{std::move(t)} {}
  explicit TransformChain(std::vector<Transform> stages) : stages_(std::move(stages)) {}

  Record operator()(const Record& r) const;
  const std::vector<Transform>& stages() const noexcept { return stages_; }

 private:
  std::vector<Transform> stages_;
};

// Nested chains are flattened, so compose({compose({a}), b}) == compose({a, b}).
TransformChain compose(std::vector<TransformChain> parts);

enum class ResampleMode { nearest, linear };
ResampleMode parse_resample_mode(const std::string& mode);  // throws BadMode

// Tensor-level kernels behind the record transforms.
Tensor resample_tensor(const Tensor& x, const Shape& target, ResampleMode mode);
Tensor crop_tensor(const Tensor& x, const Shape& target);
Tensor pad_tensor(const Tensor& x, const Shape& target, float value);

// x <- (x - mean) / std
Transform normalize_fixed(std::vector<std::string> fields, double mean, double std);
// Half-pixel-centre mapping src = (dst + 0.5) * S / T - 0.5 along every axis.
Transform resample_to_shape(std::vector<std::string> fields, Shape target, ResampleMode mode);
// Extra voxel of an odd margin is dropped from the high-index side.
Transform crop_center(std::vector<std::string> fields, Shape target);
// Extra voxel of an odd margin is added on the high-index side.
Transform pad_to_shape(std::vector<std::string> fields, Shape target, double value);
Transform threshold(std::string field, double t);
// Prepends a class axis of size num_classes.
Transform one_hot(std::string field, std::int64_t num_classes);
Transform add_channel_dim(std::string field);
Transform rename_field(std::string from, std::string to);
Transform keep_only(std::vector<std::string> fields);
// Numbers become shape-[] tensors; rectangular numeric lists become n-d tensors.
Transform cast_to_tensor(std::string field);

// Replaces each path field with its NIfTI voxels and adds "<field>_meta"
// holding the spacing list. Relative paths resolve against `data_root`.
Transform load_nifti(std::vector<std::string> fields, std::filesystem::path data_root = ".");

}  // namespace ember
