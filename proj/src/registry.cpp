#include "ember/registry.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <utility>

#include "ember/hooks.hpp"
#include "ember/ops.hpp"

namespace ember {

namespace {

using json = nlohmann::ordered_json;

constexpr Category kCategories[] = {Category::dataset, Category::transform, Category::model,     Category::loss,
                                    Category::metric,  Category::optimizer, Category::workflow, Category::hook};

bool kind_matches(ParamKind kind, const json& v) {
  auto all = [&](auto pred) { return v.is_array() && std::all_of(v.begin(), v.end(), pred); };
  switch (kind) {
    case ParamKind::integer: return v.is_number_integer();
    case ParamKind::real: return v.is_number();
    case ParamKind::boolean: return v.is_boolean();
    case ParamKind::string: return v.is_string();
    case ParamKind::int_list: return all([](const json& e) { return e.is_number_integer(); });
    case ParamKind::real_list: return all([](const json& e) { return e.is_number(); });
    case ParamKind::string_list: return all([](const json& e) { return e.is_string(); });
  }
  return false;
}

std::string describe_value(const json& v) {
  std::string s = v.dump();
  if (s.size() > 40) s = s.substr(0, 37) + "...";
  return s;
}

std::string choices_text(const std::vector<std::string>& choices) {
  std::string out;
  for (const auto& c : choices) out += (out.empty() ? "" : ", ") + ("\"" + c + "\"");
  return out;
}

// Problems with one descriptor's parameters, in schema order then declaration order.
std::vector<Finding> param_findings(const RegistryEntry& e, const json& given, const std::string& path) {
  std::vector<Finding> out;
  for (const auto& [key, value] : given.items()) {
    const bool known = std::any_of(e.params.begin(), e.params.end(), [&](const ParamSchema& s) { return s.name == key; });
    if (known) continue;
    Finding f{path + ".params." + key, Errc::UnknownKey, e.type + " has no parameter \"" + key + "\"", std::nullopt};
    std::size_t best = 3;
    for (const auto& s : e.params) {
      const std::size_t d = edit_distance(key, s.name);
      if (d < best) {
        best = d;
        f.suggestion = s.name;
      }
    }
    out.push_back(std::move(f));
  }
  for (const auto& s : e.params) {
    const std::string here = path + ".params." + s.name;
    if (!given.contains(s.name)) {
      if (s.required) out.push_back({here, Errc::MissingField, "required parameter of " + e.type, std::nullopt});
      continue;
    }
    const json& v = given.at(s.name);
    if (!kind_matches(s.kind, v)) {
      out.push_back({here, Errc::TypeError,
                     "expected " + std::string(param_kind_name(s.kind)) + ", got " + describe_value(v), std::nullopt});
    } else if (!s.choices.empty() && std::find(s.choices.begin(), s.choices.end(), v.get<std::string>()) == s.choices.end()) {
      out.push_back({here, Errc::TypeError, "expected one of " + choices_text(s.choices) + ", got " + describe_value(v),
                     std::nullopt});
    }
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view param_kind_name(ParamKind k) noexcept {
  switch (k) {
    case ParamKind::integer: return "int";
    case ParamKind::real: return "real";
    case ParamKind::boolean: return "bool";
    case ParamKind::string: return "string";
    case ParamKind::int_list: return "int-list";
    case ParamKind::real_list: return "real-list";
    case ParamKind::string_list: return "string-list";
  }
  return "unknown";
}

std::string_view category_name(Category c) noexcept {
  switch (c) {
    case Category::dataset: return "dataset";
    case Category::transform: return "transform";
    case Category::model: return "model";
    case Category::loss: return "loss";
    case Category::metric: return "metric";
    case Category::optimizer: return "optimizer";
    case Category::workflow: return "workflow";
    case Category::hook: return "hook";
  }
  return "unknown";
}

const json& Params::at(const std::string& name) const {
  if (!values_.contains(name)) throw Error(Errc::MissingField, path_ + ".params." + name);
  return values_.at(name);
}

namespace {

[[noreturn]] void kind_error(const std::string& path, const std::string& name, ParamKind kind, const json& v) {
  throw Error(Errc::TypeError, path + ".params." + name,
              "expected " + std::string(param_kind_name(kind)) + ", got " + describe_value(v));
}

template <class T>
std::vector<T> list_of(const Params& p, const json& v, const std::string& name, ParamKind kind) {
  if (!kind_matches(kind, v)) kind_error(p.path(), name, kind, v);
  return v.get<std::vector<T>>();
}

}  // namespace

std::int64_t Params::integer(const std::string& name) const {
  const json& v = at(name);
  if (!v.is_number_integer()) kind_error(path_, name, ParamKind::integer, v);
  return v.get<std::int64_t>();
}

double Params::real(const std::string& name) const {
  const json& v = at(name);
  if (!v.is_number()) kind_error(path_, name, ParamKind::real, v);
  return v.get<double>();
}

bool Params::boolean(const std::string& name) const {
  const json& v = at(name);
  if (!v.is_boolean()) kind_error(path_, name, ParamKind::boolean, v);
  return v.get<bool>();
}

std::string Params::string(const std::string& name) const {
  const json& v = at(name);
  if (!v.is_string()) kind_error(path_, name, ParamKind::string, v);
  return v.get<std::string>();
}

std::vector<std::int64_t> Params::ints(const std::string& name) const {
  return list_of<std::int64_t>(*this, at(name), name, ParamKind::int_list);
}

std::vector<double> Params::reals(const std::string& name) const {
  return list_of<double>(*this, at(name), name, ParamKind::real_list);
}

std::vector<std::string> Params::strings(const std::string& name) const {
  return list_of<std::string>(*this, at(name), name, ParamKind::string_list);
}

void Registry::add(RegistryEntry entry) {
  if (entries_.contains(entry.type)) throw Error(Errc::NameCollision, entry.type, "type already registered");
  for (const auto& p : entry.params) {
    if (p.required != p.default_value.is_null()) {
      throw Error(Errc::BadSpec, entry.type + "." + p.name, "required parameters have no default, optional ones must");
    }
  }
  std::string key = entry.type;
  entries_.emplace(std::move(key), std::move(entry));
}

const RegistryEntry* Registry::find(std::string_view type) const {
  const auto it = entries_.find(type);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<const RegistryEntry*> Registry::entries() const {
  std::vector<const RegistryEntry*> out;
  for (Category c : kCategories) {
    for (const auto& [name, e] : entries_) {
      if (e.category == c) out.push_back(&e);
    }
  }
  return out;
}

Params Registry::resolve(const ModuleDescriptor& d, const std::string& path) const {
  const RegistryEntry* e = find(d.type);
  if (!e) throw Error(Errc::UnknownType, path + ".type", "unknown type \"" + d.type + "\"");
  const auto findings = param_findings(*e, d.params, path);
  if (!findings.empty()) throw Error(findings.front().code, findings.front().path, findings.front().message);
  json merged = json::object();
  for (const auto& s : e->params) merged[s.name] = d.params.contains(s.name) ? d.params.at(s.name) : s.default_value;
  return Params(path, std::move(merged));
}

Product Registry::construct(const ModuleDescriptor& d, Category expected, const std::string& path,
                            const BuildContext& ctx) const {
  try {
    const RegistryEntry* e = find(d.type);
    if (e && e->category != expected) {
      throw Error(Errc::ConfigError, path + ".type",
                  d.type + " is a " + std::string(category_name(e->category)) + ", expected a " +
                      std::string(category_name(expected)));
    }
    const Params params = resolve(d, path);
    return e->construct(params, ctx);
  } catch (const Error& err) {
    throw Error(Errc::ConstructionError, path, d.type + ": " + err.what());
  } catch (const std::exception& err) {
    throw Error(Errc::ConstructionError, path, d.type + ": " + err.what());
  }
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::optional<std::string> suggest_type(const Registry& r, std::string_view typo, std::optional<Category> category) {
  const std::string needle = lower(typo);
  std::optional<std::string> best;
  std::size_t best_distance = 0;
  for (const RegistryEntry* e : r.entries()) {
    if (category && e->category != *category) continue;
    const std::size_t d = edit_distance(needle, lower(e->type));
    const std::size_t limit = std::max<std::size_t>(3, e->type.size() / 2);
    if (d <= limit && (!best || d < best_distance)) {
      best = e->type;
      best_distance = d;
    }
  }
  return best;
}

json ValidationReport::to_json() const {
  json j;
  j["ok"] = ok();
  j["errors"] = json::array();
  for (const auto& f : errors) {
    json e;
    e["path"] = f.path;
    e["code"] = errc_name(f.code);
    e["message"] = f.message;
    if (f.suggestion) e["suggestion"] = *f.suggestion;
    j["errors"].push_back(std::move(e));
  }
  return j;
}

std::string ValidationReport::to_text() const {
  std::string out;
  for (const auto& f : errors) {
    out += std::string(errc_name(f.code)) + " at " + f.path + ": " + f.message;
    if (f.suggestion) out += " (did you mean \"" + *f.suggestion + "\"?)";
    out += "\n";
  }
  return out;
}

namespace {

std::string_view workflow_type_for(std::string_view phase) {
  if (phase == "train") return "Training";
  if (phase == "validate") return "Validation";
  return "Testing";
}

void check_descriptor(const Registry& r, const ModuleDescriptor& d, Category expected, const std::string& path,
                      std::vector<Finding>& out) {
  const RegistryEntry* e = r.find(d.type);
  if (!e) {
    out.push_back({path, Errc::UnknownType, "unknown " + std::string(category_name(expected)) + " type \"" + d.type + "\"",
                   suggest_type(r, d.type, expected)});
    return;
  }
  if (e->category != expected) {
    out.push_back({path + ".type", Errc::ConfigError,
                   d.type + " is a " + std::string(category_name(e->category)) + ", this slot takes a " +
                       std::string(category_name(expected)),
                   std::nullopt});
    return;
  }
  auto found = param_findings(*e, d.params, path);
  out.insert(out.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
}

}  // namespace

ValidationReport check_config(const ConfigDocument& doc, const Registry& registry) {
  ValidationReport report;
  auto& out = report.errors;
  for (auto name : kPhaseNames) {
    const PhaseConfig* p = doc.phase(name);
    if (!p) continue;
    const std::string path = "phases." + std::string(name);
    auto list = [&](const std::vector<ModuleDescriptor>& ds, const char* key, Category c) {
      for (std::size_t i = 0; i < ds.size(); ++i) {
        check_descriptor(registry, ds[i], c, path + "." + key + "[" + std::to_string(i) + "]", out);
      }
    };
    check_descriptor(registry, p->dataset, Category::dataset, path + ".dataset", out);
    list(p->transforms, "transforms", Category::transform);
    check_descriptor(registry, p->model, Category::model, path + ".model", out);
    list(p->losses, "losses", Category::loss);
    list(p->metrics, "metrics", Category::metric);
    if (p->optimizer) check_descriptor(registry, *p->optimizer, Category::optimizer, path + ".optimizer", out);
    check_descriptor(registry, p->workflow, Category::workflow, path + ".workflow", out);
    const RegistryEntry* wf = registry.find(p->workflow.type);
    if (wf && wf->category == Category::workflow && wf->type != workflow_type_for(name)) {
      out.push_back({path + ".workflow.type", Errc::ConfigError,
                     "the " + std::string(name) + " phase runs a " + std::string(workflow_type_for(name)) +
                         " workflow, not " + wf->type,
                     std::string(workflow_type_for(name))});
    }
    list(p->hooks, "hooks", Category::hook);
  }
  return report;
}

ValidationReport check_config_text(const std::string& text, const Registry& registry) {
  try {
    return check_config(parse_config(text), registry);
  } catch (const Error& e) {
    ValidationReport report;
    report.errors.push_back({e.subject().empty() ? "(root)" : e.subject(), e.code(), e.what(), std::nullopt});
    return report;
  }
}

json describe_registry(const Registry& registry) {
  json j;
  j["catalog_version"] = 1;
  j["config_version"] = kConfigVersion;
  j["categories"] = json::array();
  for (Category c : kCategories) j["categories"].push_back(category_name(c));
  j["modules"] = json::array();
  for (const RegistryEntry* e : registry.entries()) {
    json m;
    m["type"] = e->type;
    m["category"] = category_name(e->category);
    m["doc"] = e->doc;
    m["params"] = json::array();
    for (const auto& p : e->params) {
      json pj;
      pj["name"] = p.name;
      pj["kind"] = param_kind_name(p.kind);
      pj["required"] = p.required;
      if (!p.required) pj["default"] = p.default_value;
      if (!p.choices.empty()) pj["choices"] = p.choices;
      pj["doc"] = p.doc;
      m["params"].push_back(std::move(pj));
    }
    j["modules"].push_back(std::move(m));
  }
  return j;
}

json config_json_schema(const Registry& registry) {
  auto descriptor = [&](Category c) {
    json types = json::array();
    for (const RegistryEntry* e : registry.entries()) {
      if (e->category == c) types.push_back(e->type);
    }
    json d;
    d["type"] = "object";
    d["required"] = {"type"};
    d["additionalProperties"] = false;
    d["properties"]["type"] = {{"enum", types}};
    d["properties"]["params"] = {{"type", "object"}};
    return d;
  };
  auto list = [&](Category c) { return json{{"type", "array"}, {"items", descriptor(c)}}; };
  auto phase = [&](bool train) {
    json p;
    p["type"] = "object";
    p["additionalProperties"] = false;
    p["required"] = train ? json{"dataset", "model", "workflow", "optimizer", "losses"} : json{"dataset", "model", "workflow"};
    p["properties"]["dataset"] = descriptor(Category::dataset);
    p["properties"]["transforms"] = list(Category::transform);
    p["properties"]["model"] = descriptor(Category::model);
    p["properties"]["losses"] = list(Category::loss);
    if (train) p["properties"]["losses"]["minItems"] = 1;
    p["properties"]["metrics"] = list(Category::metric);
    if (train) p["properties"]["optimizer"] = descriptor(Category::optimizer);
    p["properties"]["workflow"] = descriptor(Category::workflow);
    p["properties"]["hooks"] = list(Category::hook);
    return p;
  };
  json s;
  s["$schema"] = "https://json-schema.org/draft/2020-12/schema";
  s["title"] = "ember experiment configuration";
  s["type"] = "object";
  s["additionalProperties"] = false;
  s["required"] = {"version", "phases"};
  s["properties"]["version"] = {{"const", kConfigVersion}};
  s["properties"]["seed"] = {{"type", "integer"}, {"minimum", 0}, {"default", 42}};
  s["properties"]["data_root"] = {{"type", "string"}, {"default", "."}};
  s["properties"]["output_dir"] = {{"type", "string"}, {"default", "./output"}};
  json phases;
  phases["type"] = "object";
  phases["additionalProperties"] = false;
  phases["minProperties"] = 1;
  phases["properties"]["train"] = phase(true);
  phases["properties"]["validate"] = phase(false);
  phases["properties"]["test"] = phase(false);
  s["properties"]["phases"] = std::move(phases);
  return s;
}

ModelFactory model_factory(const Registry& registry) {
  return [&registry](const ModuleDescriptor& d) -> NamedModule {
    const RegistryEntry* e = registry.find(d.type);
    if (!e || e->category != Category::model) throw Error(Errc::UnknownModelType, d.type, "not a registered model");
    BuildContext ctx;
    return std::get<NamedModule>(e->construct(registry.resolve(d, "checkpoint.model"), ctx));
  };
}

// ---------------------------------------------------------------------------
// Built-in modules.

namespace {

ParamSchema req(std::string name, ParamKind kind, std::string doc, std::vector<std::string> choices = {}) {
  return {std::move(name), kind, true, json(), std::move(doc), std::move(choices)};
}

ParamSchema opt(std::string name, ParamKind kind, json def, std::string doc, std::vector<std::string> choices = {}) {
  return {std::move(name), kind, false, std::move(def), std::move(doc), std::move(choices)};
}

std::filesystem::path under(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

Shape shape_of(const Params& p, const std::string& name) { return p.ints(name); }

void register_datasets(Registry& r) {
  r.add({"JsonDataset", Category::dataset, "JSON manifest: an array of flat objects, one record each.",
         {req("path", ParamKind::string, "Manifest path, relative to data_root.")},
         [](const Params& p, const BuildContext& c) -> Product {
           return load_json_dataset(under(c.data_root, p.string("path")));
         }});
  r.add({"MSDDataset", Category::dataset,
         "Decathlon-style manifest with \"training\" and \"test\" lists.",
         {req("path", ParamKind::string, "Manifest path, relative to data_root."),
          opt("phase", ParamKind::string, "training", "Which list to read.", {"training", "test"})},
         [](const Params& p, const BuildContext& c) -> Product {
           const MsdPhase phase = p.string("phase") == "test" ? MsdPhase::test : MsdPhase::training;
           return load_msd_dataset(under(c.data_root, p.string("path")), phase);
         }});
}

void register_transforms(Registry& r) {
  const auto fields_doc = "Fields to transform.";
  r.add({"LoadNifti", Category::transform,
         "Replaces path fields with NIfTI voxel tensors and adds <field>_meta with the voxel spacing.",
         {req("fields", ParamKind::string_list, "Fields holding paths relative to data_root.")},
         [](const Params& p, const BuildContext& c) -> Product { return load_nifti(p.strings("fields"), c.data_root); }});
  r.add({"NormalizeFixed", Category::transform, "x <- (x - mean) / std.",
         {req("fields", ParamKind::string_list, fields_doc), req("mean", ParamKind::real, "Subtracted first."),
          req("std", ParamKind::real, "Positive divisor.")},
         [](const Params& p, const BuildContext&) -> Product {
           return normalize_fixed(p.strings("fields"), p.real("mean"), p.real("std"));
         }});
  r.add({"ResampleToShape", Category::transform, "Resamples to a fixed shape with half-pixel-centre sampling.",
         {req("fields", ParamKind::string_list, fields_doc), req("shape", ParamKind::int_list, "Target shape."),
          opt("mode", ParamKind::string, "linear", "Interpolation.", {"nearest", "linear"})},
         [](const Params& p, const BuildContext&) -> Product {
           return resample_to_shape(p.strings("fields"), shape_of(p, "shape"), parse_resample_mode(p.string("mode")));
         }});
  r.add({"CropCenter", Category::transform, "Central crop; an odd margin loses its extra voxel on the high side.",
         {req("fields", ParamKind::string_list, fields_doc), req("shape", ParamKind::int_list, "Target shape.")},
         [](const Params& p, const BuildContext&) -> Product {
           return crop_center(p.strings("fields"), shape_of(p, "shape"));
         }});
  r.add({"PadToShape", Category::transform, "Constant padding; an odd margin puts its extra voxel on the high side.",
         {req("fields", ParamKind::string_list, fields_doc), req("shape", ParamKind::int_list, "Target shape."),
          opt("value", ParamKind::real, 0.0, "Fill value.")},
         [](const Params& p, const BuildContext&) -> Product {
           return pad_to_shape(p.strings("fields"), shape_of(p, "shape"), p.real("value"));
         }});
  r.add({"Threshold", Category::transform, "1 where x > threshold, else 0.",
         {req("field", ParamKind::string, "Field to binarize."), req("threshold", ParamKind::real, "Cut-off.")},
         [](const Params& p, const BuildContext&) -> Product { return threshold(p.string("field"), p.real("threshold")); }});
  r.add({"OneHot", Category::transform, "Label map to one-hot with a leading class axis.",
         {req("field", ParamKind::string, "Field holding integer labels."),
          req("num_classes", ParamKind::integer, "Number of classes.")},
         [](const Params& p, const BuildContext&) -> Product {
           return one_hot(p.string("field"), p.integer("num_classes"));
         }});
  r.add({"AddChannelDim", Category::transform, "Prepends an axis of size 1.",
         {req("field", ParamKind::string, "Field to reshape.")},
         [](const Params& p, const BuildContext&) -> Product { return add_channel_dim(p.string("field")); }});
  r.add({"Rename", Category::transform, "Moves a field to a new name.",
         {req("from", ParamKind::string, "Existing field."), req("to", ParamKind::string, "New, unused name.")},
         [](const Params& p, const BuildContext&) -> Product { return rename_field(p.string("from"), p.string("to")); }});
  r.add({"KeepOnly", Category::transform, "Drops every field not listed.",
         {req("fields", ParamKind::string_list, "Fields to keep.")},
         [](const Params& p, const BuildContext&) -> Product { return keep_only(p.strings("fields")); }});
  r.add({"CastToTensor", Category::transform, "Numbers and rectangular numeric lists become tensors.",
         {req("field", ParamKind::string, "Field to convert.")},
         [](const Params& p, const BuildContext&) -> Product { return cast_to_tensor(p.string("field")); }});
}

void register_models(Registry& r) {
  r.add({"MLP", Category::model, "Fully connected network. Reads \"x\" [N, in], writes \"y_pred\" [N, out].",
         {req("layer_sizes", ParamKind::int_list, "Widths from input to output, at least two."),
          opt("activation", ParamKind::string, "relu", "Hidden activation.", {"relu", "sigmoid"}),
          opt("final", ParamKind::string, "logits", "Output layer.", {"logits", "softmax"})},
         [](const Params& p, const BuildContext& c) -> Product {
           MlpSpec spec;
           spec.layer_sizes = p.ints("layer_sizes");
           spec.activation = p.string("activation") == "sigmoid" ? Activation::sigmoid : Activation::relu;
           spec.final = p.string("final") == "softmax" ? FinalLayer::softmax : FinalLayer::logits;
           return build_mlp(spec, c.seed);
         }});
  r.add({"TinyUNet", Category::model,
         "Two-level 2-D U-Net. Reads \"image\" [N, C, H, W] (or [N, H, W] with one channel), writes softmax "
         "\"predictions\" [N, classes, H, W]. H and W must be multiples of 4.",
         {opt("in_channels", ParamKind::integer, 1, "Input channels."),
          opt("base_channels", ParamKind::integer, 4, "Channels of the first level; doubled per level."),
          opt("num_classes", ParamKind::integer, 2, "Output classes.")},
         [](const Params& p, const BuildContext& c) -> Product {
           return build_tiny_unet(
               TinyUNetSpec{p.integer("in_channels"), p.integer("base_channels"), p.integer("num_classes")}, c.seed);
         }});
}

void register_losses_and_metrics(Registry& r) {
  auto pred = [](const char* def) { return opt("pred", ParamKind::string, def, "Prediction field."); };
  auto target = [](const char* def) { return opt("target", ParamKind::string, def, "Target field."); };
  auto smooth = opt("smooth", ParamKind::real, 1.0, "Additive smoothing, non-negative.");
  r.add({"DiceLoss", Category::loss, "1 - soft Dice, averaged over samples and classes. Output \"dice_loss\".",
         {pred("predictions"), target("label"), smooth},
         [](const Params& p, const BuildContext&) -> Product {
           return dice_loss_module(p.string("pred"), p.string("target"), p.real("smooth"));
         }});
  r.add({"CrossEntropyLoss", Category::loss,
         "Mean negative log-likelihood of class probabilities. Output \"cross_entropy\".",
         {pred("y_pred"), target("y")},
         [](const Params& p, const BuildContext&) -> Product {
           return cross_entropy_module(p.string("pred"), p.string("target"));
         }});
  r.add({"MSELoss", Category::loss, "Mean squared error. Output \"mse\".", {pred("y_pred"), target("y")},
         [](const Params& p, const BuildContext&) -> Product { return mse_module(p.string("pred"), p.string("target")); }});
  r.add({"DiceMetric", Category::metric, "Soft Dice score. Output \"dice\".", {pred("predictions"), target("label"), smooth},
         [](const Params& p, const BuildContext&) -> Product {
           return dice_metric_module(p.string("pred"), p.string("target"), p.real("smooth"));
         }});
  r.add({"AccuracyMetric", Category::metric, "Fraction of arg-max predictions equal to the class id. Output \"accuracy\".",
         {pred("y_pred"), target("y")},
         [](const Params& p, const BuildContext&) -> Product {
           return accuracy_module(p.string("pred"), p.string("target"));
         }});
}

void register_optimizers(Registry& r) {
  r.add({"SGD", Category::optimizer, "Stochastic gradient descent with optional momentum.",
         {opt("lr", ParamKind::real, 0.01, "Learning rate."), opt("momentum", ParamKind::real, 0.0, "Momentum factor.")},
         [](const Params& p, const BuildContext&) -> Product {
           return Optimizer(SgdOptions{static_cast<float>(p.real("lr")), static_cast<float>(p.real("momentum"))});
         }});
  r.add({"Adam", Category::optimizer, "Adam with bias correction.",
         {opt("lr", ParamKind::real, 0.001, "Learning rate."), opt("beta1", ParamKind::real, 0.9, "First-moment decay."),
          opt("beta2", ParamKind::real, 0.999, "Second-moment decay."), opt("eps", ParamKind::real, 1e-8, "Denominator guard.")},
         [](const Params& p, const BuildContext&) -> Product {
           return Optimizer(AdamOptions{static_cast<float>(p.real("lr")), static_cast<float>(p.real("beta1")),
                                        static_cast<float>(p.real("beta2")), static_cast<float>(p.real("eps"))});
         }});
}

void register_workflows(Registry& r) {
  auto batch = opt("batch_size", ParamKind::integer, 1, "Records per batch.");
  auto drop_last = opt("drop_last", ParamKind::boolean, false, "Skip a final partial batch.");
  r.add({"Training", Category::workflow, "Optimizes the model over the dataset for a number of epochs.",
         {req("epochs", ParamKind::integer, "Passes over the dataset."), batch,
          opt("shuffle", ParamKind::boolean, true, "Reshuffle every epoch."), drop_last},
         [](const Params& p, const BuildContext& c) -> Product {
           WorkflowSettings s;
           s.kind = Phase::training;
           s.epochs = p.integer("epochs");
           s.loader = LoaderSpec{p.integer("batch_size"), p.boolean("shuffle"), c.seed, p.boolean("drop_last")};
           return s;
         }});
  r.add({"Validation", Category::workflow, "Evaluates losses and metrics without updating the model.", {batch},
         [](const Params& p, const BuildContext& c) -> Product {
           WorkflowSettings s;
           s.kind = Phase::validation;
           s.loader = LoaderSpec{p.integer("batch_size"), false, c.seed, false};
           return s;
         }});
  r.add({"Testing", Category::workflow, "Evaluates the model and optionally exports its outputs.",
         {batch, opt("export_predictions", ParamKind::boolean, false,
                     "Write <index>_<output>.rtf files under <output_dir>/predictions.")},
         [](const Params& p, const BuildContext& c) -> Product {
           WorkflowSettings s;
           s.kind = Phase::testing;
           s.loader = LoaderSpec{p.integer("batch_size"), false, c.seed, false};
           s.export_predictions = p.boolean("export_predictions");
           return s;
         }});
}

void ensure_parent(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
}

void register_hooks(Registry& r) {
  r.add({"LoggingHook", Category::hook, "Prints one line per epoch with every loss and metric.", {},
         [](const Params&, const BuildContext& c) -> Product {
           return std::make_shared<LoggingHook>(c.log ? *c.log : std::cout);
         }});
  r.add({"SummaryHook", Category::hook, "Appends one JSON object per epoch to a line-delimited file.",
         {req("path", ParamKind::string, "File path, relative to output_dir.")},
         [](const Params& p, const BuildContext& c) -> Product {
           const auto path = under(c.output_dir, p.string("path"));
           ensure_parent(path);
           return std::make_shared<SummaryHook>(path);
         }});
  r.add({"SaveBestModel", Category::hook,
         "Checkpoints the model to best.ckpt whenever the watched value strictly improves.",
         {req("watch", ParamKind::string, "\"losses.<name>\" or \"metrics.<name>\"."),
          opt("mode", ParamKind::string, "min", "Direction of improvement.", {"min", "max"}),
          opt("history", ParamKind::boolean, false, "Also keep best_epoch<N>.ckpt for every improvement."),
          opt("dir", ParamKind::string, ".", "Directory, relative to output_dir.")},
         [](const Params& p, const BuildContext& c) -> Product {
           const WatchMode mode = p.string("mode") == "max" ? WatchMode::max : WatchMode::min;
           return std::make_shared<SaveBestModel>(under(c.output_dir, p.string("dir")), p.string("watch"), mode,
                                                  p.boolean("history"));
         }});
}

Registry make_builtin() {
  Registry r;
  register_datasets(r);
  register_transforms(r);
  register_models(r);
  register_losses_and_metrics(r);
  register_optimizers(r);
  register_workflows(r);
  register_hooks(r);
  return r;
}

}  // namespace

const Registry& builtin_registry() {
  static const Registry r = make_builtin();
  return r;
}

}  // namespace ember
