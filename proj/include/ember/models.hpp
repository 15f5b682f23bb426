#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "ember/autodiff.hpp"
#include "ember/error.hpp"
#include "ember/optim.hpp"
#include "ember/record.hpp"
#include "json.hpp"

namespace ember {

/// How a module was built: registry type name plus its construction parameters.
/// Checkpoints store it so a model can be rebuilt before its weights are loaded.
struct ModuleDescriptor {
  std::string type;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
};

/// A computation with named inputs and outputs. Inputs are gathered from a
/// batch by name and outputs written back under `output_names`.
class NamedModule {
 public:
  // Receives the input Vars in `input_names` order and the parameter Vars in
  // `parameters()` order. Must return one Var per output name.
  using ForwardFn = std::function<std::vector<Var>(Tape&, std::span<const Var> inputs, std::span<const Var> params)>;

  NamedModule(std::string name, std::vector<std::string> input_names, std::vector<std::string> output_names,
              std::vector<Parameter> params, ForwardFn forward, ModuleDescriptor descriptor = {});

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& input_names() const noexcept { return inputs_; }
  const std::vector<std::string>& output_names() const noexcept { return outputs_; }
  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }
  const ModuleDescriptor& descriptor() const noexcept { return descriptor_; }
  Parameter& parameter(std::string_view name);

  // Puts every parameter on the tape; trainable ones become gradient leaves.
  std::vector<Var> bind_parameters(Tape& tape, bool trainable) const;

  std::vector<Var> forward(Tape& tape, std::span<const Var> inputs, std::span<const Var> params) const;
  // Untraced evaluation on a gradient-free tape.
  std::vector<Tensor> forward(std::span<const Tensor> inputs) const;

 private:
  std::string name_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::vector<Parameter> params_;
  ForwardFn forward_;
  ModuleDescriptor descriptor_;
};

// Runs the module on a batch and returns an extended copy. Throws MissingField,
// NotATensor, or OutputCollision when an output name already exists.
Batch apply_to_batch(const NamedModule& m, const Batch& b);

enum class Activation { relu, sigmoid };
enum class FinalLayer { logits, softmax };

struct MlpSpec {
  std::vector<std::int64_t> layer_sizes;
  Activation activation = Activation::relu;
  FinalLayer final = FinalLayer::logits;
};

struct TinyUNetSpec {
  std::int64_t in_channels = 1;
  std::int64_t base_channels = 8;
  std::int64_t num_classes = 2;
};

// Dense layers y = x W^T + b; weights "layerK.weight" [out, in], "layerK.bias" [out].
// Reads "x" ([N, in] or [in]) and writes "y_pred".
NamedModule build_mlp(const MlpSpec& spec, std::uint64_t seed);

// Two-level encoder/decoder with skip concatenation and a softmax head.
// Reads "image" [N, C, H, W] (or [N, H, W] with one input channel) and writes
// "predictions" [N, num_classes, H, W]. H and W must be divisible by 4.
NamedModule build_tiny_unet(const TinyUNetSpec& spec, std::uint64_t seed);

namespace detail {

template <class T>
struct fn_traits;
template <class R, class... A>
struct fn_traits<std::function<R(A...)>> {
  using result = R;
  using args = std::tuple<std::decay_t<A>...>;
  static constexpr std::size_t arity = sizeof...(A);
};

template <class A>
decltype(auto) adapt_arg(const Var& v) {
  if constexpr (std::is_same_v<A, Var>) {
    return v;
  } else {
    static_assert(std::is_same_v<A, Tensor>, "adapted functions take Var or Tensor arguments");
    return v.value();
  }
}

inline void adapt_result(Tape&, Var v, std::vector<Var>& out) { out.push_back(v); }
inline void adapt_result(Tape& tape, const Tensor& t, std::vector<Var>& out) { out.push_back(tape.constant(t)); }
template <class T>
void adapt_result(Tape& tape, const std::vector<T>& items, std::vector<Var>& out) {
  for (const auto& item : items) adapt_result(tape, item, out);
}

}  // namespace detail

// Wraps a positional function as a NamedModule. The function receives the
// named inputs followed by the parameters, each as Var (traced) or Tensor
// (treated as a constant). It may return a Var, a Tensor, or a vector of either.
template <class F>
NamedModule module_adapter(F fn, std::vector<std::string> input_names, std::vector<std::string> output_names,
                           std::vector<Parameter> params = {}, std::string name = "ModuleAdapter") {
  using Traits = detail::fn_traits<decltype(std::function{fn})>;
  using Args = typename Traits::args;
  if (Traits::arity != input_names.size() + params.size()) {
    throw Error(Errc::ArityMismatch, name,
                "function takes " + std::to_string(Traits::arity) + " arguments for " +
                    std::to_string(input_names.size()) + " inputs and " + std::to_string(params.size()) + " parameters");
  }
  auto forward = [fn](Tape& tape, std::span<const Var> inputs, std::span<const Var> ps) {
    std::vector<Var> all(inputs.begin(), inputs.end());
    all.insert(all.end(), ps.begin(), ps.end());
    std::vector<Var> out;
    [&]<std::size_t... I>(std::index_sequence<I...>) {
      detail::adapt_result(tape, fn(detail::adapt_arg<std::tuple_element_t<I, Args>>(all[I])...), out);
    }(std::make_index_sequence<Traits::arity>{});
    return out;
  };
  return NamedModule(std::move(name), std::move(input_names), std::move(output_names), std::move(params),
                     std::move(forward));
}

}  // namespace ember
