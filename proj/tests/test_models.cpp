#include <cmath>

#include "doctest.h"
#include "ember/models.hpp"
#include "support/expect.hpp"
#include "support/gradcheck.hpp"

using namespace ember;

namespace {

Batch batch_of(Record r, std::int64_t n) { return Batch{std::move(r), n, {}}; }

// Double-precision TinyUNet over the same parameter layout as build_tiny_unet.
ref::DTensor ref_unet(const std::vector<ref::DTensor>& in) {
  const auto& x = in[0];
  auto block = [&](const ref::DTensor& v, std::size_t k) {
    return ref::map(ref::conv2d(v, in[1 + 2 * k], &in[2 + 2 * k], 1, 1), ref::relu);
  };
  const auto e1 = block(x, 0);
  const auto e2 = block(ref::maxpool2(e1), 1);
  const auto mid = block(ref::maxpool2(e2), 2);
  const auto d2 = block(ref::concat({ref::upsample2(mid), e2}, 1), 3);
  const auto d1 = block(ref::concat({ref::upsample2(d2), e1}, 1), 4);
  return ref::softmax(ref::conv2d(d1, in[11], &in[12], 1, 0), 1);
}

}  // namespace

TEST_CASE("mlp forward by hand") {
  NamedModule m = build_mlp(MlpSpec{{2, 1}}, 0);
  m.parameter("layer0.weight").value = Tensor::matrix({{1, 1}});
  m.parameter("layer0.bias").value = Tensor::vector({0});
  const std::vector<Tensor> in{Tensor::vector({3, 4})};
  CHECK(m.forward(in)[0] == Tensor::vector({7}));
  const std::vector<Tensor> batch{Tensor::matrix({{3, 4}, {1, -1}})};
  CHECK(m.forward(batch)[0] == Tensor::matrix({{7}, {0}}));

  CHECK_ERRC(build_mlp(MlpSpec{{2}}, 0), Errc::BadSpec);
  CHECK_ERRC(build_mlp(MlpSpec{{2, 0}}, 0), Errc::BadSpec);
  const std::vector<Tensor> wrong{Tensor::matrix({{1, 2, 3}})};
  CHECK_ERRC(m.forward(wrong), Errc::ShapeError);
}

TEST_CASE("mlp structure and determinism") {
  const MlpSpec spec{{2, 16, 3}, Activation::relu, FinalLayer::softmax};
  const NamedModule a = build_mlp(spec, 5), b = build_mlp(spec, 5), c = build_mlp(spec, 6);
  REQUIRE(a.parameters().size() == 4);
  CHECK(a.parameters()[0].name == "layer0.weight");
  CHECK(a.parameters()[0].value.shape() == Shape{16, 2});
  CHECK(a.parameters()[3].name == "layer1.bias");
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].name == b.parameters()[i].name);
    CHECK(bitwise_equal(a.parameters()[i].value, b.parameters()[i].value));
  }
  CHECK_FALSE(a.parameters()[0].value == c.parameters()[0].value);
  const float bound = std::sqrt(6.0f / 18.0f);
  for (float w : a.parameters()[0].value.data()) CHECK(std::abs(w) <= bound);

  const std::vector<Tensor> in{Tensor::matrix({{0.5f, -1}, {2, 0.25f}})};
  const Tensor y = a.forward(in)[0];
  CHECK(bitwise_equal(y, a.forward(in)[0]));
  for (std::int64_t r = 0; r < 2; ++r) CHECK(y[3 * r] + y[3 * r + 1] + y[3 * r + 2] == doctest::Approx(1.0));
  CHECK(a.descriptor().type == "MLP");
  CHECK(a.descriptor().params["layer_sizes"] == nlohmann::ordered_json({2, 16, 3}));
}

TEST_CASE("tiny unet shape contract") {
  const NamedModule m = build_tiny_unet(TinyUNetSpec{1, 4, 3}, 1);
  const std::vector<Tensor> in{Tensor::full({2, 1, 16, 16}, 0.3f)};
  const Tensor y = m.forward(in)[0];
  CHECK(y.shape() == Shape{2, 3, 16, 16});
  for (std::int64_t n = 0; n < 2; ++n) {
    for (std::int64_t i = 0; i < 256; ++i) {
      float s = 0;
      for (std::int64_t c = 0; c < 3; ++c) s += y[(n * 3 + c) * 256 + i];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
    }
  }
  const std::vector<Tensor> rank3{Tensor::full({2, 16, 16}, 0.3f)};
  CHECK(bitwise_equal(m.forward(rank3)[0], y));
  const std::vector<Tensor> odd{Tensor({1, 1, 10, 10})};
  CHECK_ERRC(m.forward(odd), Errc::ShapeError);
  const std::vector<Tensor> channels{Tensor({1, 2, 8, 8})};
  CHECK_ERRC(m.forward(channels), Errc::ShapeError);
  CHECK_ERRC(build_tiny_unet(TinyUNetSpec{1, 0, 2}, 1), Errc::BadSpec);

  std::vector<std::string> names;
  for (const auto& p : m.parameters()) names.push_back(p.name);
  CHECK(names == std::vector<std::string>{"enc1.conv.weight", "enc1.conv.bias", "enc2.conv.weight", "enc2.conv.bias",
                                          "bottleneck.conv.weight", "bottleneck.conv.bias", "dec2.conv.weight",
                                          "dec2.conv.bias", "dec1.conv.weight", "dec1.conv.bias", "head.conv.weight",
                                          "head.conv.bias"});
  CHECK(m.parameters()[6].value.shape() == Shape{8, 24, 3, 3});
}

TEST_CASE("tiny unet end-to-end gradient matches finite differences") {
  NamedModule m = build_tiny_unet(TinyUNetSpec{1, 2, 2}, 11);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (auto& p : m.parameters()) {
    if (p.name.ends_with("bias")) {
      for (auto& v : p.value.data()) v = static_cast<float>(d(gen));
    }
  }
  ref::DTensor x({1, 1, 8, 8});
  for (auto& v : x.v) v = d(gen) * 2;

  gradcheck::Case c;
  c.name = "tiny_unet";
  c.inputs.push_back(x);
  for (const auto& p : m.parameters()) c.inputs.push_back(gradcheck::to_dtensor(p.value));
  c.reference = ref_unet;
  c.traced = [&m](std::span<const Var> v) {
    Tape& tape = v[0].tape();
    return m.forward(tape, v.subspan(0, 1), v.subspan(1))[0];
  };
  const auto report = gradcheck::run(c, 17, 1e-4);
  CHECK(report.checked >= 10);
  CHECK(report.max_forward_error < 1e-5);
  CHECK(report.max_grad_error < 1e-2);
}

TEST_CASE("module adapter routes by name") {
  const NamedModule id = module_adapter([](Var x) { return x; }, {"x"}, {"y"});
  const Tensor t = Tensor::vector({1, 2});
  const Batch out = apply_to_batch(id, batch_of(Record{{"x", t}}, 2));
  CHECK(out.entries.at("y").tensor() == t);
  CHECK(out.entries.names() == std::vector<std::string>{"x", "y"});

  const NamedModule add2 = module_adapter([](Var a, Var b) { return a + b; }, {"a", "b"}, {"s"});
  const Batch sum = apply_to_batch(add2, batch_of(Record{{"b", Tensor::vector({10, 20})}, {"a", t}}, 2));
  CHECK(sum.entries.at("s").tensor() == Tensor::vector({11, 22}));

  CHECK_ERRC(module_adapter([](Var x) { return x; }, {"a", "b"}, {"s"}), Errc::ArityMismatch);

  // Untraced third-party function over Tensors, with a parameter.
  const NamedModule scale = module_adapter([](const Tensor& x, const Tensor& k) { return apply_binary(BinaryKind::mul, x, k); },
                                           {"x"}, {"y"}, {Parameter{"k", Tensor::scalar(3), std::nullopt}});
  CHECK(apply_to_batch(scale, batch_of(Record{{"x", t}}, 2)).entries.at("y").tensor() == Tensor::vector({3, 6}));

  const NamedModule two = module_adapter([](Var x) { return std::vector<Var>{x, -x}; }, {"x"}, {"p", "n"});
  CHECK(apply_to_batch(two, batch_of(Record{{"x", t}}, 2)).entries.at("n").tensor() == Tensor::vector({-1, -2}));
  const NamedModule short_out = module_adapter([](Var x) { return x; }, {"x"}, {"p", "n"});
  CHECK_ERRC(apply_to_batch(short_out, batch_of(Record{{"x", t}}, 2)), Errc::ArityMismatch);
}

TEST_CASE("apply_to_batch") {
  const NamedModule m = build_mlp(MlpSpec{{2, 3}}, 1);
  const Batch in = batch_of(Record{{"x", Tensor::matrix({{1, 2}})}, {"id", ValueList{"a"}}}, 1);
  const Batch before = in;
  const Batch out = apply_to_batch(m, in);
  CHECK(out.entries.names() == std::vector<std::string>{"x", "id", "y_pred"});
  CHECK(out.entries.at("y_pred").tensor().shape() == Shape{1, 3});
  CHECK(in.entries == before.entries);
  CHECK_ERRC(apply_to_batch(m, out), Errc::OutputCollision);
  CHECK_ERRC(apply_to_batch(m, batch_of(Record{{"z", Tensor::matrix({{1, 2}})}}, 1)), Errc::MissingField);
  CHECK_ERRC(apply_to_batch(m, batch_of(Record{{"x", "path"}}, 1)), Errc::NotATensor);
}

TEST_CASE("parameter names are unique") {
  CHECK_ERRC(module_adapter([](Var x, Var a, Var b) { return x + a + b; }, {"x"}, {"y"},
                            {Parameter{"w", Tensor::scalar(1), {}}, Parameter{"w", Tensor::scalar(2), {}}}),
             Errc::NameCollision);
}
