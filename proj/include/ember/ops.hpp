#pragma once

#include <string>

#include "ember/autodiff.hpp"
#include "ember/models.hpp"

namespace ember {

inline constexpr float kProbabilityFloor = 1e-7f;

// Soft Dice with squared denominator, per sample and class over the spatial
// axes of [N, C, ...] tensors, averaged to a scalar:
//   D = (2 sum(p g) + smooth) / (sum(p^2) + sum(g^2) + smooth)
// A (sample, class) pair whose denominator is zero scores 1. A target of rank
// pred.rank - 1 is read as a label map and one-hot encoded along axis 1.
Var dice_score(Var pred, Var target, float smooth = 1.0f);
Var dice_loss(Var pred, Var target, float smooth = 1.0f);

// -mean log p[target] with p clamped at kProbabilityFloor. `pred` is [N, C]
// probabilities; `target` holds class ids [N] or one-hot rows [N, C].
Var cross_entropy(Var pred, Var target);

Var mse(Var pred, Var target);

// Fraction of rows whose argmax (lowest index on ties) equals the target class.
Tensor accuracy(const Tensor& pred, const Tensor& target);

// Loss and metric modules. Each reads the two named fields and writes one
// scalar output.
NamedModule dice_loss_module(std::string pred_field = "predictions", std::string target_field = "label", double smooth = 1.0);
NamedModule dice_metric_module(std::string pred_field = "predictions", std::string target_field = "label", double smooth = 1.0);
NamedModule cross_entropy_module(std::string pred_field = "y_pred", std::string target_field = "y");
NamedModule mse_module(std::string pred_field = "y_pred", std::string target_field = "y");
NamedModule accuracy_module(std::string pred_field = "y_pred", std::string target_field = "y");

}  // namespace ember
