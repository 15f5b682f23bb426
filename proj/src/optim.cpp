#include "ember/optim.hpp"

#include <cmath>

#include "ember/error.hpp"

namespace ember {

float Optimizer::learning_rate() const {
  return std::visit([](const auto& o) { return o.lr; }, options_);
}

void Optimizer::step(std::span<Parameter> params) {
  for (const auto& p : params) {
    if (!p.grad) throw Error(Errc::MissingGradient, p.name);
    if (p.grad->shape() != p.value.shape()) {
      throw Error(Errc::ShapeMismatch, p.name, "gradient " + to_string(p.grad->shape()));
    }
  }
  if (first_.size() != params.size()) {
    first_.clear();
    second_.clear();
    for (const auto& p : params) {
      first_.emplace_back(p.value.shape());
      if (is_adam()) second_.emplace_back(p.value.shape());
    }
  }
  ++step_count_;

  if (const auto* sgd = std::get_if<SgdOptions>(&options_)) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto v = first_[k].data();
      auto w = params[k].value.data();
      auto g = params[k].grad->data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = sgd->momentum * v[i] + g[i];
        w[i] -= sgd->lr * v[i];
      }
      params[k].grad.reset();
    }
    return;
  }

  const auto& adam = std::get<AdamOptions>(options_);
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(static_cast<double>(adam.beta1), t);
  const double c2 = 1.0 - std::pow(static_cast<double>(adam.beta2), t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto m = first_[k].data();
    auto v = second_[k].data();
    auto w = params[k].value.data();
    auto g = params[k].grad->data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = adam.beta1 * m[i] + (1.0f - adam.beta1) * g[i];
      v[i] = adam.beta2 * v[i] + (1.0f - adam.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= static_cast<float>(adam.lr * m_hat / (std::sqrt(v_hat) + adam.eps));
    }
    params[k].grad.reset();
  }
}

}  // namespace ember
