#include "ember/ops.hpp"

#include <cmath>

namespace ember {

namespace {

// Label map [N, ...] to one-hot [N, C, ...].
Tensor one_hot_axis1(const Tensor& labels, std::int64_t classes) {
  Shape shape = labels.shape();
  shape.insert(shape.begin() + 1, classes);
  Tensor out(shape);
  const std::int64_t n = labels.shape()[0];
  const std::int64_t inner = n == 0 ? 0 : labels.size() / n;
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t i = 0; i < inner; ++i) {
      const float v = labels[b * inner + i];
      if (!(v >= 0.0f) || v != std::floor(v) || v >= static_cast<float>(classes)) {
        throw Error(Errc::ClassOutOfRange, std::to_string(v), std::to_string(classes) + " classes");
      }
      out[(b * classes + static_cast<std::int64_t>(v)) * inner + i] = 1.0f;
    }
  }
  return out;
}

// Dense one-hot target with the same shape as `pred`.
Var dense_target(Var pred, Var target, const char* what) {
  const Shape& p = pred.shape();
  const Shape& t = target.shape();
  if (t == p) return target;
  if (p.size() >= 2 && t.size() + 1 == p.size()) {
    Shape expected = p;
    expected.erase(expected.begin() + 1);
    if (t == expected) return pred.tape().constant(one_hot_axis1(target.value(), p[1]));
  }
  throw Error(Errc::ShapeMismatch, what, "prediction " + to_string(p) + " vs target " + to_string(t));
}

void check_normalized(const Tensor& pred) {
  const auto c = pred.shape()[1];
  for (std::int64_t r = 0; r < pred.shape()[0]; ++r) {
    double total = 0;
    for (std::int64_t k = 0; k < c; ++k) total += pred[r * c + k];
    if (std::abs(total - 1.0) > 1e-4) {
      throw Error(Errc::NotNormalized, std::to_string(r), "row sums to " + std::to_string(total));
    }
  }
}

}  // namespace

Var dice_score(Var pred, Var target, float smooth) {
  if (smooth < 0.0f) throw Error(Errc::NegativeSmooth, std::to_string(smooth));
  if (pred.shape().size() < 2) throw Error(Errc::ShapeMismatch, "dice", "prediction must be [N, C, ...]");
  const Var g = dense_target(pred, target, "dice");
  Tape& tape = pred.tape();

  std::vector<std::int64_t> spatial;
  for (std::int64_t a = 2; a < static_cast<std::int64_t>(pred.shape().size()); ++a) spatial.push_back(a);
  const Var inter = sum(pred * g, spatial);
  const Var den = sum(pred * pred, spatial) + sum(g * g, spatial);

  // 0/0 pairs (empty prediction and target) score exactly 1.
  Tensor empty(den.shape());
  for (std::int64_t i = 0; i < empty.size(); ++i) empty[i] = den.value()[i] == 0.0f ? 1.0f : 0.0f;
  const Var guard = tape.constant(std::move(empty)) + smooth;
  const Var d = (2.0f * inter + guard) / (den + guard);
  return mean(d);
}

Var dice_loss(Var pred, Var target, float smooth) { return 1.0f - dice_score(pred, target, smooth); }

Var cross_entropy(Var pred, Var target) {
  if (pred.shape().size() != 2) throw Error(Errc::ShapeMismatch, "cross_entropy", "prediction must be [N, C]");
  check_normalized(pred.value());
  const Var onehot = dense_target(pred, target, "cross_entropy");
  const auto n = static_cast<float>(pred.shape()[0]);
  return -(1.0f / n) * sum(onehot * log(clamp_min(pred, kProbabilityFloor)));
}

Var mse(Var pred, Var target) {
  if (pred.shape() != target.shape()) {
    throw Error(Errc::ShapeMismatch, "mse", "prediction " + to_string(pred.shape()) + " vs target " + to_string(target.shape()));
  }
  const Var diff = pred - target;
  return mean(diff * diff);
}

Tensor accuracy(const Tensor& pred, const Tensor& target) {
  if (pred.rank() != 2) throw Error(Errc::ShapeMismatch, "accuracy", "prediction must be [N, C]");
  const auto n = pred.shape()[0], c = pred.shape()[1];
  const bool ids = target.shape() == Shape{n};
  if (!ids && target.shape() != pred.shape()) {
    throw Error(Errc::ShapeMismatch, "accuracy", "prediction " + to_string(pred.shape()) + " vs target " + to_string(target.shape()));
  }
  auto argmax = [c](const Tensor& t, std::int64_t r) {
    std::int64_t best = 0;
    for (std::int64_t k = 1; k < c; ++k) {
      if (t[r * c + k] > t[r * c + best]) best = k;
    }
    return best;
  };
  std::int64_t correct = 0;
  for (std::int64_t r = 0; r < n; ++r) {
    const auto truth = ids ? static_cast<std::int64_t>(target[r]) : argmax(target, r);
    if (argmax(pred, r) == truth) ++correct;
  }
  return Tensor::scalar(n == 0 ? 0.0f : static_cast<float>(static_cast<double>(correct) / static_cast<double>(n)));
}

namespace {

using PairFn = std::function<Var(Var, Var)>;

NamedModule pair_module(std::string name, std::string pred, std::string target, std::string output, PairFn fn,
                        nlohmann::ordered_json params) {
  auto forward = [fn = std::move(fn)](Tape&, std::span<const Var> in, std::span<const Var>) {
    return std::vector<Var>{fn(in[0], in[1])};
  };
  ModuleDescriptor desc{name, std::move(params)};
  return NamedModule(std::move(name), {std::move(pred), std::move(target)}, {std::move(output)}, {}, std::move(forward),
                     std::move(desc));
}

nlohmann::ordered_json fields_json(const std::string& pred, const std::string& target) {
  return {{"pred_field", pred}, {"target_field", target}};
}

}  // namespace

NamedModule dice_loss_module(std::string pred_field, std::string target_field, double smooth) {
  if (smooth < 0) throw Error(Errc::NegativeSmooth, std::to_string(smooth));
  auto params = fields_json(pred_field, target_field);
  params["smooth"] = smooth;
  const auto s = static_cast<float>(smooth);
  return pair_module("DiceLoss", std::move(pred_field), std::move(target_field), "dice_loss",
                     [s](Var p, Var g) { return dice_loss(p, g, s); }, std::move(params));
}

NamedModule dice_metric_module(std::string pred_field, std::string target_field, double smooth) {
  if (smooth < 0) throw Error(Errc::NegativeSmooth, std::to_string(smooth));
  auto params = fields_json(pred_field, target_field);
  params["smooth"] = smooth;
  const auto s = static_cast<float>(smooth);
  return pair_module("DiceMetric", std::move(pred_field), std::move(target_field), "dice",
                     [s](Var p, Var g) { return p.tape().constant(dice_score(p, g, s).value()); }, std::move(params));
}

NamedModule cross_entropy_module(std::string pred_field, std::string target_field) {
  auto params = fields_json(pred_field, target_field);
  return pair_module("CrossEntropyLoss", std::move(pred_field), std::move(target_field), "cross_entropy",
                     [](Var p, Var t) { return cross_entropy(p, t); }, std::move(params));
}

NamedModule mse_module(std::string pred_field, std::string target_field) {
  auto params = fields_json(pred_field, target_field);
  return pair_module("MSELoss", std::move(pred_field), std::move(target_field), "mse",
                     [](Var p, Var t) { return mse(p, t); }, std::move(params));
}

NamedModule accuracy_module(std::string pred_field, std::string target_field) {
  auto params = fields_json(pred_field, target_field);
  return pair_module("AccuracyMetric", std::move(pred_field), std::move(target_field), "accuracy",
                     [](Var p, Var t) { return p.tape().constant(accuracy(p.value(), t.value())); }, std::move(params));
}

}  // namespace ember
