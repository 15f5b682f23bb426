#include "ember/config.hpp"

#include <initializer_list>
#include <utility>

#include "ember/error.hpp"
#include "ember/json_value.hpp"

namespace ember {

namespace {

using json = nlohmann::ordered_json;

std::string type_name(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "boolean";
    case json::value_t::string: return "string";
    case json::value_t::array: return "array";
    case json::value_t::object: return "object";
    default: return "number";
  }
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw Error(Errc::TypeError, path, "expected an object, got " + type_name(j));
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw Error(Errc::UnknownKey, path.empty() ? key : path + "." + key, "not a recognized key");
  }
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw Error(Errc::TypeError, path, "expected a string, got " + type_name(j));
  return j.get<std::string>();
}

ModuleDescriptor parse_descriptor(const json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown(j, path, {"type", "params"});
  if (!j.contains("type")) throw Error(Errc::MissingField, path + ".type", "every module needs a type");
  ModuleDescriptor d;
  d.type = string_at(j.at("type"), path + ".type");
  if (d.type.empty()) throw Error(Errc::TypeError, path + ".type", "type name is empty");
  if (j.contains("params")) {
    expect_object(j.at("params"), path + ".params");
    d.params = j.at("params");
  }
  return d;
}

std::vector<ModuleDescriptor> parse_list(const json& phase, const std::string& key, const std::string& path) {
  std::vector<ModuleDescriptor> out;
  if (!phase.contains(key)) return out;
  const json& list = phase.at(key);
  const std::string here = path + "." + key;
  if (!list.is_array()) throw Error(Errc::TypeError, here, "expected an array, got " + type_name(list));
  for (std::size_t i = 0; i < list.size(); ++i) {
    out.push_back(parse_descriptor(list[i], here + "[" + std::to_string(i) + "]"));
  }
  return out;
}

ModuleDescriptor required_descriptor(const json& phase, const std::string& key, const std::string& path) {
  if (!phase.contains(key)) throw Error(Errc::MissingField, path + "." + key, "required in every phase");
  return parse_descriptor(phase.at(key), path + "." + key);
}

PhaseConfig parse_phase(const json& j, std::string_view name) {
  const std::string path = "phases." + std::string(name);
  expect_object(j, path);
  reject_unknown(j, path, {"dataset", "transforms", "model", "losses", "metrics", "optimizer", "workflow", "hooks"});
  PhaseConfig p;
  p.dataset = required_descriptor(j, "dataset", path);
  p.transforms = parse_list(j, "transforms", path);
  p.model = required_descriptor(j, "model", path);
  p.losses = parse_list(j, "losses", path);
  p.metrics = parse_list(j, "metrics", path);
  if (j.contains("optimizer")) p.optimizer = parse_descriptor(j.at("optimizer"), path + ".optimizer");
  p.workflow = required_descriptor(j, "workflow", path);
  p.hooks = parse_list(j, "hooks", path);

  if (name == "train") {
    if (!p.optimizer) throw Error(Errc::MissingField, path + ".optimizer", "the train phase needs an optimizer");
    if (p.losses.empty()) throw Error(Errc::MissingField, path + ".losses", "the train phase needs at least one loss");
  } else if (p.optimizer) {
    throw Error(Errc::ConfigError, path + ".optimizer", "only the train phase takes an optimizer");
  }
  return p;
}

json descriptor_json(const ModuleDescriptor& d) {
  json j;
  j["type"] = d.type;
  j["params"] = d.params;
  return j;
}

json list_json(const std::vector<ModuleDescriptor>& list) {
  json out = json::array();
  for (const auto& d : list) out.push_back(descriptor_json(d));
  return out;
}

}  // namespace

const PhaseConfig* ConfigDocument::phase(std::string_view name) const {
  if (name == "train") return train ? &*train : nullptr;
  if (name == "validate") return validate ? &*validate : nullptr;
  if (name == "test") return test ? &*test : nullptr;
  return nullptr;
}

PhaseConfig* ConfigDocument::phase(std::string_view name) {
  return const_cast<PhaseConfig*>(std::as_const(*this).phase(name));
}

ConfigDocument parse_config(const std::string& text) {
  const json root = parse_json(text, "config");
  if (!root.is_object()) throw Error(Errc::TypeError, "(root)", "expected an object, got " + type_name(root));
  reject_unknown(root, "", {"version", "seed", "data_root", "output_dir", "phases"});

  ConfigDocument doc;
  if (!root.contains("version")) throw Error(Errc::BadVersion, "version", "missing; expected \"1.0\"");
  if (!root.at("version").is_string() || root.at("version").get<std::string>() != kConfigVersion) {
    throw Error(Errc::BadVersion, "version", "unsupported version " + root.at("version").dump() + "; expected \"1.0\"");
  }
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned()) throw Error(Errc::TypeError, "seed", "expected a non-negative integer");
    doc.seed = s.get<std::uint64_t>();
  }
  if (root.contains("data_root")) doc.data_root = string_at(root.at("data_root"), "data_root");
  if (root.contains("output_dir")) doc.output_dir = string_at(root.at("output_dir"), "output_dir");

  if (!root.contains("phases")) throw Error(Errc::MissingPhase, "phases", "at least one phase is required");
  const json& phases = root.at("phases");
  expect_object(phases, "phases");
  reject_unknown(phases, "phases", {"train", "validate", "test"});
  if (phases.empty()) throw Error(Errc::MissingPhase, "phases", "at least one of train, validate, test is required");
  for (auto name : kPhaseNames) {
    if (phases.contains(name)) {
      const std::string key(name);
      auto parsed = parse_phase(phases.at(key), name);
      *(name == "train" ? &doc.train : name == "validate" ? &doc.validate : &doc.test) = std::move(parsed);
    }
  }
  return doc;
}

ConfigDocument load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_text_file(path));
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

nlohmann::ordered_json config_to_json(const ConfigDocument& doc) {
  json j;
  j["version"] = doc.version;
  j["seed"] = doc.seed;
  j["data_root"] = doc.data_root;
  j["output_dir"] = doc.output_dir;
  json phases = json::object();
  for (auto name : kPhaseNames) {
    const PhaseConfig* p = doc.phase(name);
    if (!p) continue;
    json pj;
    pj["dataset"] = descriptor_json(p->dataset);
    pj["transforms"] = list_json(p->transforms);
    pj["model"] = descriptor_json(p->model);
    pj["losses"] = list_json(p->losses);
    pj["metrics"] = list_json(p->metrics);
    if (p->optimizer) pj["optimizer"] = descriptor_json(*p->optimizer);
    pj["workflow"] = descriptor_json(p->workflow);
    pj["hooks"] = list_json(p->hooks);
    phases[std::string(name)] = std::move(pj);
  }
  j["phases"] = std::move(phases);
  return j;
}

std::string serialize_config(const ConfigDocument& doc) { return config_to_json(doc).dump(2) + "\n"; }

}  // namespace ember
