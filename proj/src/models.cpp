#include "ember/models.hpp"

#include <algorithm>
#include <set>

#include "ember/rng.hpp"

namespace ember {

NamedModule::NamedModule(std::string name, std::vector<std::string> input_names, std::vector<std::string> output_names,
                         std::vector<Parameter> params, ForwardFn forward, ModuleDescriptor descriptor)
    : name_(std::move(name)),
      inputs_(std::move(input_names)),
      outputs_(std::move(output_names)),
      params_(std::move(params)),
      forward_(std::move(forward)),
      descriptor_(std::move(descriptor)) {
  std::set<std::string> seen;
  for (const auto& p : params_) {
    if (!seen.insert(p.name).second) throw Error(Errc::NameCollision, p.name, "duplicate parameter name");
  }
}

Parameter& NamedModule::parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error(Errc::MissingField, std::string(name), "no such parameter in " + name_);
}

std::vector<Var> NamedModule::bind_parameters(Tape& tape, bool trainable) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(tape.leaf(p.value, trainable && tape.grad_enabled()));
  return vars;
}

std::vector<Var> NamedModule::forward(Tape& tape, std::span<const Var> inputs, std::span<const Var> params) const {
  if (inputs.size() != inputs_.size()) {
    throw Error(Errc::ArityMismatch, name_, std::to_string(inputs.size()) + " inputs for " + std::to_string(inputs_.size()) + " names");
  }
  auto out = forward_(tape, inputs, params);
  if (out.size() != outputs_.size()) {
    throw Error(Errc::ArityMismatch, name_, "forward produced " + std::to_string(out.size()) + " outputs for " +
                                                std::to_string(outputs_.size()) + " names");
  }
  return out;
}

std::vector<Tensor> NamedModule::forward(std::span<const Tensor> inputs) const {
  Tape tape(false);
  std::vector<Var> in;
  for (const auto& t : inputs) in.push_back(tape.constant(t));
  const auto params = bind_parameters(tape, false);
  std::vector<Tensor> out;
  for (const auto& v : forward(tape, in, params)) out.push_back(v.value());
  return out;
}

Batch apply_to_batch(const NamedModule& m, const Batch& b) {
  for (const auto& name : m.output_names()) {
    if (b.entries.contains(name)) throw Error(Errc::OutputCollision, name, "module " + m.name());
  }
  std::vector<Tensor> inputs;
  for (const auto& name : m.input_names()) {
    const Value& v = b.entries.at(name);
    if (!v.is_tensor()) throw Error(Errc::NotATensor, name, "module " + m.name() + " input");
    inputs.push_back(v.tensor());
  }
  auto outputs = m.forward(inputs);
  Batch out = b;
  for (std::size_t i = 0; i < outputs.size(); ++i) out.entries.insert(m.output_names()[i], std::move(outputs[i]));
  return out;
}

namespace {

Parameter init_param(std::string name, std::uint64_t seed, const InitKind& kind, Shape shape) {
  const auto s = mix_seed(seed, name);
  return Parameter{std::move(name), rng_init(s, kind, std::move(shape)), std::nullopt};
}

Parameter zero_param(std::string name, Shape shape) { return Parameter{std::move(name), Tensor(std::move(shape)), std::nullopt}; }

}  // namespace

NamedModule build_mlp(const MlpSpec& spec, std::uint64_t seed) {
  const auto& sizes = spec.layer_sizes;
  if (sizes.size() < 2) throw Error(Errc::BadSpec, "layer_sizes", "at least an input and an output size are required");
  for (auto s : sizes) {
    if (s <= 0) throw Error(Errc::BadSpec, "layer_sizes", "sizes must be positive");
  }
  std::vector<Parameter> params;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const std::string prefix = "layer" + std::to_string(k);
    params.push_back(init_param(prefix + ".weight", seed, GlorotUniformInit{sizes[k], sizes[k + 1]}, {sizes[k + 1], sizes[k]}));
    params.push_back(zero_param(prefix + ".bias", {sizes[k + 1]}));
  }
  const auto in_features = sizes.front();
  const auto activation = spec.activation;
  const auto final = spec.final;
  auto forward = [in_features, activation, final](Tape&, std::span<const Var> inputs, std::span<const Var> ps) {
    Var h = inputs[0];
    const bool vector_input = h.shape().size() == 1;
    if (vector_input) h = reshape(h, {1, h.shape()[0]});
    if (h.shape().size() != 2 || h.shape()[1] != in_features) {
      throw Error(Errc::ShapeError, to_string(inputs[0].shape()), "MLP expects [N, " + std::to_string(in_features) + "]");
    }
    const std::size_t layers = ps.size() / 2;
    for (std::size_t k = 0; k < layers; ++k) {
      h = matmul(h, transpose(ps[2 * k])) + ps[2 * k + 1];
      if (k + 1 < layers) h = activation == Activation::relu ? relu(h) : sigmoid(h);
    }
    if (final == FinalLayer::softmax) h = softmax(h, 1);
    if (vector_input) h = reshape(h, {h.shape()[1]});
    return std::vector<Var>{h};
  };
  ModuleDescriptor desc{"MLP",
                        {{"layer_sizes", sizes},
                         {"activation", activation == Activation::relu ? "relu" : "sigmoid"},
                         {"final", final == FinalLayer::logits ? "logits" : "softmax"}}};
  return NamedModule("MLP", {"x"}, {"y_pred"}, std::move(params), std::move(forward), std::move(desc));
}

NamedModule build_tiny_unet(const TinyUNetSpec& spec, std::uint64_t seed) {
  const auto in = spec.in_channels, b = spec.base_channels, nc = spec.num_classes;
  if (in <= 0 || b <= 0 || nc <= 0) throw Error(Errc::BadSpec, "TinyUNet", "channel counts must be positive");

  std::vector<Parameter> params;
  auto conv = [&](const std::string& block, std::int64_t cin, std::int64_t cout, std::int64_t k) {
    params.push_back(init_param(block + ".conv.weight", seed, HeNormalInit{cin * k * k}, {cout, cin, k, k}));
    params.push_back(zero_param(block + ".conv.bias", {cout}));
  };
  conv("enc1", in, b, 3);
  conv("enc2", b, 2 * b, 3);
  conv("bottleneck", 2 * b, 4 * b, 3);
  conv("dec2", 4 * b + 2 * b, 2 * b, 3);
  conv("dec1", 2 * b + b, b, 3);
  conv("head", b, nc, 1);

  auto forward = [in](Tape&, std::span<const Var> inputs, std::span<const Var> p) {
    Var x = inputs[0];
    if (x.shape().size() == 3 && in == 1) x = reshape(x, {x.shape()[0], 1, x.shape()[1], x.shape()[2]});
    const Shape& s = x.shape();
    if (s.size() != 4 || s[1] != in) {
      throw Error(Errc::ShapeError, to_string(inputs[0].shape()), "TinyUNet expects [N, " + std::to_string(in) + ", H, W]");
    }
    if (s[2] % 4 != 0 || s[3] % 4 != 0) {
      throw Error(Errc::ShapeError, to_string(s), "spatial dimensions must be divisible by 4");
    }
    const Conv2dOptions same{1, 1};
    auto block = [&](Var v, std::size_t k) { return relu(conv2d(v, p[2 * k], p[2 * k + 1], same)); };
    const Var e1 = block(x, 0);
    const Var e2 = block(maxpool2(e1), 1);
    const Var mid = block(maxpool2(e2), 2);
    const Var d2 = block(concat(std::vector<Var>{upsample_nearest2(mid), e2}, 1), 3);
    const Var d1 = block(concat(std::vector<Var>{upsample_nearest2(d2), e1}, 1), 4);
    const Var logits = conv2d(d1, p[10], p[11]);
    return std::vector<Var>{softmax(logits, 1)};
  };
  ModuleDescriptor desc{"TinyUNet", {{"in_channels", in}, {"base_channels", b}, {"num_classes", nc}}};
  return NamedModule("TinyUNet", {"image"}, {"predictions"}, std::move(params), std::move(forward), std::move(desc));
}

}  // namespace ember
