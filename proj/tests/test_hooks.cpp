#include <cstring>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ember/checkpoint.hpp"
#include "ember/hooks.hpp"
#include "ember/io.hpp"
#include "ember/rng.hpp"
#include "ember/ops.hpp"
#include "support/expect.hpp"
#include "support/tempdir.hpp"

using namespace ember;

namespace {

EpochEvent event(std::int64_t epoch, ScalarMap losses = {}, ScalarMap metrics = {}) {
  EpochEvent e;
  e.workflow_id = "train";
  e.epoch = epoch;
  e.losses = std::move(losses);
  e.metrics = std::move(metrics);
  e.model_ref = std::make_shared<const ModelSnapshot>(ModelSnapshot::of(build_mlp(MlpSpec{{2, 2}}, epoch)));
  return e;
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

NamedModule factory(const ModuleDescriptor& d) {
  if (d.type == "TinyUNet") {
    return build_tiny_unet(TinyUNetSpec{d.params.at("in_channels"), d.params.at("base_channels"), d.params.at("num_classes")}, 0);
  }
  if (d.type == "MLP") return build_mlp(MlpSpec{d.params.at("layer_sizes").get<std::vector<std::int64_t>>()}, 0);
  throw Error(Errc::UnknownModelType, d.type);
}

}  // namespace

TEST_CASE("logging hook") {
  std::ostringstream out;
  LoggingHook hook(out);
  hook.on_event(event(3, {{"dice_loss", 0.25}}));
  hook.on_event(event(4, {}, {}));
  hook.on_event(event(5, {{"a", 1.0 / 3}}, {{"dice", 12345.678}}));
  std::istringstream in(out.str());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "phase=training epoch=3 dice_loss=0.250000");
  CHECK(lines[1] == "phase=training epoch=4");
  CHECK(lines[2] == "phase=training epoch=5 a=0.333333 dice=12345.7");
}

TEST_CASE("summary hook writes line-delimited json") {
  testing::TempDir dir;
  SummaryHook hook(dir / "summary.jsonl");
  for (int e = 0; e < 5; ++e) {
    EpochEvent ev = event(e, {{"mse", 0.5 / (e + 1)}});
    ev.sample_inputs = Record{{"x", Tensor::full({2, 3}, 1.5f)}, {"id", "a"}};
    ev.sample_outputs = Record{{"y_pred", Tensor::vector({-1, 0, 4})}};
    hook.on_event(ev);
  }
  const auto lines = lines_of(dir / "summary.jsonl");
  REQUIRE(lines.size() == 5);
  for (int e = 0; e < 5; ++e) {
    const auto j = nlohmann::json::parse(lines[e]);
    CHECK(j["epoch"] == e);
    CHECK(j["phase"] == "training");
    CHECK(j["workflow_id"] == "train");
    CHECK(j["losses"]["mse"].get<double>() == doctest::Approx(0.5 / (e + 1)));
    CHECK(j["inputs"]["x"]["mean"] == 1.5);
    CHECK(j["inputs"]["x"]["min"] == 1.5);
    CHECK(j["inputs"]["x"]["max"] == 1.5);
    CHECK(j["inputs"]["x"]["shape"] == nlohmann::json({2, 3}));
    CHECK_FALSE(j["inputs"].contains("id"));
    CHECK(j["outputs"]["y_pred"]["min"] == -1);
    CHECK(j["outputs"]["y_pred"]["max"] == 4);
  }
  SummaryHook again(dir / "summary.jsonl");
  again.on_event(event(0));
  CHECK(lines_of(dir / "summary.jsonl").size() == 6);

  SummaryHook bad(dir / "missing" / "dir" / "s.jsonl");
  CHECK_ERRC(bad.on_event(event(0)), Errc::FileError);
}

TEST_CASE("save best model on strict improvement") {
  testing::TempDir dir;
  EventBus bus;
  auto hook = std::make_shared<SaveBestModel>(dir.path(), "losses.dice_loss", WatchMode::min, true);
  bus.subscribe("train", {EventKind::epoch_end}, hook);
  const std::vector<double> trace{0.9, 0.5, 0.7, 0.4};
  for (std::size_t e = 0; e < trace.size(); ++e) bus.emit(event(static_cast<std::int64_t>(e), {{"dice_loss", trace[e]}}));
  CHECK(hook->saves() == 3);
  CHECK(hook->best() == 0.4);
  CHECK(std::filesystem::exists(dir / "best.ckpt"));
  for (int e : {0, 1, 3}) CHECK(std::filesystem::exists(dir / ("best_epoch" + std::to_string(e) + ".ckpt")));
  CHECK_FALSE(std::filesystem::exists(dir / "best_epoch2.ckpt"));
  // best.ckpt holds the epoch-3 snapshot.
  const ModelSnapshot best = load_checkpoint(dir / "best.ckpt");
  CHECK(bitwise_equal(best.params[0].second, event(3).model_ref->params[0].second));
  CHECK(bus.activity_log().empty());
}

TEST_CASE("save best model edge cases") {
  testing::TempDir dir;
  EventBus bus;
  auto constant = std::make_shared<SaveBestModel>(dir / "const", "metrics.dice", WatchMode::max);
  auto absent = std::make_shared<SaveBestModel>(dir / "absent", "metrics.accuracy", WatchMode::max);
  bus.subscribe("train", {EventKind::epoch_end}, constant);
  bus.subscribe("train", {EventKind::epoch_end}, absent);
  for (int e = 0; e < 4; ++e) bus.emit(event(e, {}, {{"dice", 0.8}}));
  CHECK(constant->saves() == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "const" / "best_epoch0.ckpt"));
  CHECK(absent->saves() == 0);
  CHECK_FALSE(std::filesystem::exists(dir / "absent"));
  REQUIRE(bus.activity_log().size() == 1);
  CHECK(bus.activity_log()[0].find("MissingWatchField") != std::string::npos);

  auto rising = std::make_shared<SaveBestModel>(dir / "max", "metrics.dice", WatchMode::max);
  for (double v : {0.1, 0.3, 0.2, 0.3, 0.35}) rising->on_event(event(0, {}, {{"dice", v}}));
  CHECK(rising->saves() == 3);
  CHECK_ERRC(SaveBestModel(dir.path(), "dice", WatchMode::max), Errc::ConfigError);
}

TEST_CASE("checkpoint round trip") {
  testing::TempDir dir;
  const NamedModule unet = build_tiny_unet(TinyUNetSpec{1, 4, 2}, 21);
  save_model(unet, dir / "unet.ckpt");
  const NamedModule loaded = load_model(dir / "unet.ckpt", factory);
  const std::vector<Tensor> in{rng_init(5, NormalInit{0, 1}, {2, 1, 8, 8})};
  CHECK(bitwise_equal(unet.forward(in)[0], loaded.forward(in)[0]));
  for (std::size_t i = 0; i < unet.parameters().size(); ++i) {
    CHECK(loaded.parameters()[i].name == unet.parameters()[i].name);
    CHECK(bitwise_equal(loaded.parameters()[i].value, unet.parameters()[i].value));
  }
  CHECK(loaded.descriptor().type == "TinyUNet");
}

TEST_CASE("checkpoint layout") {
  NamedModule m = build_mlp(MlpSpec{{2, 3}}, 1);
  const auto bytes = checkpoint::encode(ModelSnapshot::of(m));
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "EISN");
  CHECK(bytes[4] == 1);
  const std::uint32_t len = bytes[8] | bytes[9] << 8 | bytes[10] << 16 | bytes[11] << 24;
  const auto header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  CHECK(header["model"]["type"] == "MLP");
  CHECK(header["tensors"][0]["name"] == "layer0.weight");
  CHECK(header["tensors"][0]["offset"] == 0);
  CHECK(header["tensors"][1]["offset"] == 24);
  CHECK(bytes.size() == 12 + len + 4 * 9);
  float first;
  std::memcpy(&first, bytes.data() + 12 + len, 4);
  CHECK(first == m.parameters()[0].value[0]);
}

TEST_CASE("checkpoint errors") {
  const NamedModule m = build_mlp(MlpSpec{{2, 3}}, 1);
  auto snap = ModelSnapshot::of(m);
  const auto bytes = checkpoint::encode(snap);

  CHECK_ERRC(checkpoint::decode({}), Errc::BadMagic);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_ERRC(checkpoint::decode(magic), Errc::BadMagic);
  auto version = bytes;
  version[4] = 2;
  CHECK_ERRC(checkpoint::decode(version), Errc::VersionMismatch);
  CHECK_ERRC(checkpoint::decode(std::vector<unsigned char>(bytes.begin(), bytes.end() - 1)), Errc::TruncatedData);
  CHECK_ERRC(checkpoint::decode(std::vector<unsigned char>(bytes.begin(), bytes.begin() + 20)), Errc::TruncatedData);
  CHECK_ERRC(checkpoint::decode(std::vector<unsigned char>(bytes.begin(), bytes.begin() + 6)), Errc::TruncatedData);

  auto extra = snap;
  extra.params.emplace_back("layer9.weight", Tensor({1}));
  CHECK_ERRC(restore_model(checkpoint::decode(checkpoint::encode(extra)), factory), Errc::ParamTableMismatch);
  auto missing = snap;
  missing.params.pop_back();
  CHECK_ERRC(restore_model(missing, factory), Errc::ParamTableMismatch);
  auto reshaped = snap;
  reshaped.params[0].second = Tensor({2, 3});
  CHECK_ERRC(restore_model(reshaped, factory), Errc::ParamTableMismatch);
  auto unknown = snap;
  unknown.descriptor.type = "VNet";
  CHECK_ERRC(restore_model(unknown, factory), Errc::UnknownModelType);

  testing::TempDir dir;
  CHECK_ERRC(load_model(dir / "none.ckpt", factory), Errc::FileError);
}
