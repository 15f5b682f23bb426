#pragma once

// Autodiff-versus-finite-difference harness. The finite differences are taken
// on the double-precision reference (reference.hpp), never on the engine.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ember/autodiff.hpp"
#include "support/reference.hpp"

namespace gradcheck {

inline ember::Tensor to_tensor(const ref::DTensor& d) {
  std::vector<float> v(d.v.begin(), d.v.end());
  return ember::Tensor(d.shape, std::move(v));
}

inline ref::DTensor to_dtensor(const ember::Tensor& t) {
  return ref::DTensor(t.shape(), std::vector<double>(t.data().begin(), t.data().end()));
}

// Inputs are rounded to float32 first so both paths see identical values.
inline ref::DTensor round_to_float(ref::DTensor d) {
  for (auto& x : d.v) x = static_cast<double>(static_cast<float>(x));
  return d;
}

struct Case {
  std::string name;
  std::vector<ref::DTensor> inputs;
  std::function<ref::DTensor(const std::vector<ref::DTensor>&)> reference;
  std::function<ember::Var(std::span<const ember::Var>)> traced;
  std::vector<bool> check_input;  // empty: check every input
};

struct Report {
  double max_grad_error = 0;     // |ad - fd| / max(1, |fd|)
  double max_forward_error = 0;  // |engine - reference| / max(1, |reference|)
  std::int64_t checked = 0;
};

inline Report run(Case c, std::uint64_t seed, double h = 1e-3) {
  for (auto& in : c.inputs) in = round_to_float(std::move(in));
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  const ref::DTensor ref_out = c.reference(c.inputs);
  ref::DTensor weights(ref_out.shape);
  for (auto& w : weights.v) w = static_cast<double>(static_cast<float>(dist(gen)));
  auto weighted = [&](const std::vector<ref::DTensor>& in) {
    const ref::DTensor y = c.reference(in);
    double s = 0;
    for (std::size_t i = 0; i < y.v.size(); ++i) s += y.v[i] * weights.v[i];
    return s;
  };

  ember::Tape tape;
  std::vector<ember::Var> vars;
  for (const auto& in : c.inputs) vars.push_back(tape.variable(to_tensor(in)));
  const ember::Var y = c.traced(vars);
  const ember::Var loss = ember::sum(ember::mul(y, tape.constant(to_tensor(weights))));
  const ember::Gradients grads = tape.backward(loss);

  Report report;
  for (std::int64_t i = 0; i < ref_out.size(); ++i) {
    const double e = std::abs(y.value()[i] - ref_out.v[i]) / std::max(1.0, std::abs(ref_out.v[i]));
    report.max_forward_error = std::max(report.max_forward_error, e);
  }
  for (std::size_t k = 0; k < c.inputs.size(); ++k) {
    if (!c.check_input.empty() && !c.check_input[k]) continue;
    const ember::Tensor ad = grads.of(vars[k]);
    auto probe = c.inputs;
    for (std::int64_t i = 0; i < probe[k].size(); ++i) {
      const double x0 = probe[k].v[i];
      probe[k].v[i] = x0 + h;
      const double up = weighted(probe);
      probe[k].v[i] = x0 - h;
      const double down = weighted(probe);
      probe[k].v[i] = x0;
      const double fd = (up - down) / (2 * h);
      const double err = std::abs(ad[i] - fd) / std::max(1.0, std::abs(fd));
      report.max_grad_error = std::max(report.max_grad_error, err);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace gradcheck
