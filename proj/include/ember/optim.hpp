#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ember/tensor.hpp"

namespace ember {

struct Parameter {
  std::string name;  // dotted path, e.g. "enc1.conv.weight"
  Tensor value;
  std::optional<Tensor> grad;
};

struct SgdOptions {
  float lr = 0.01f;
  float momentum = 0.0f;
};

struct AdamOptions {
  float lr = 0.001f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// First-order optimizer with per-parameter auxiliary buffers.
///
/// Buffers are created lazily on the first step and matched to parameters by
/// position, so the same parameter list must be passed to every step.
class Optimizer {
 public:
  explicit Optimizer(SgdOptions opts) : options_(opts) {}
  explicit Optimizer(AdamOptions opts) : options_(opts) {}

  // Applies one update from each parameter's grad, then clears the grads.
  // Throws MissingGradient before touching anything if a grad is absent.
  void step(std::span<Parameter> params);

  bool is_adam() const noexcept { return std::holds_alternative<AdamOptions>(options_); }
  float learning_rate() const;
  std::int64_t step_count() const noexcept { return step_count_; }

 private:
  std::variant<SgdOptions, AdamOptions> options_;
  std::int64_t step_count_ = 0;
  std::vector<Tensor> first_;   // SGD velocity or Adam m
  std::vector<Tensor> second_;  // Adam v
};

}  // namespace ember
