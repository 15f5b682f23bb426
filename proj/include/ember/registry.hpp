#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ember/config.hpp"
#include "ember/dataset.hpp"
#include "ember/error.hpp"
#include "ember/models.hpp"
#include "ember/optim.hpp"
#include "ember/transforms.hpp"
#include "ember/workflows.hpp"
#include "json.hpp"

namespace ember {

enum class ParamKind { integer, real, boolean, string, int_list, real_list, string_list };
enum class Category { dataset, transform, model, loss, metric, optimizer, workflow, hook };

std::string_view param_kind_name(ParamKind k) noexcept;
std::string_view category_name(Category c) noexcept;

struct ParamSchema {
  std::string name;
  ParamKind kind = ParamKind::string;
  bool required = false;
  nlohmann::ordered_json default_value;  // null when required
  std::string doc;
  std::vector<std::string> choices;  // allowed values of a string parameter; empty = any
};

// Declared parameters merged with schema defaults.
class Params {
 public:
  Params(std::string path, nlohmann::ordered_json values) : path_(std::move(path)), values_(std::move(values)) {}

  const std::string& path() const noexcept { return path_; }
  const nlohmann::ordered_json& values() const noexcept { return values_; }

  // Each throws TypeError naming "<path>.params.<name>" on a kind mismatch.
  std::int64_t integer(const std::string& name) const;
  double real(const std::string& name) const;
  bool boolean(const std::string& name) const;
  std::string string(const std::string& name) const;
  std::vector<std::int64_t> ints(const std::string& name) const;
  std::vector<double> reals(const std::string& name) const;
  std::vector<std::string> strings(const std::string& name) const;

 private:
  const nlohmann::ordered_json& at(const std::string& name) const;
  std::string path_;
  nlohmann::ordered_json values_;
};

// Run-level settings of a workflow descriptor.
struct WorkflowSettings {
  Phase kind = Phase::training;
  LoaderSpec loader;
  std::int64_t epochs = 1;
  bool export_predictions = false;
};

// Everything a constructor may need besides its own parameters.
struct BuildContext {
  std::uint64_t seed = 0;  // already derived for this module
  std::filesystem::path data_root = ".";
  std::filesystem::path output_dir = ".";
  std::string phase;  // "train", "validate" or "test"
  std::ostream* log = nullptr;
};

using Product = std::variant<Dataset, Transform, NamedModule, Optimizer, WorkflowSettings, std::shared_ptr<Hook>>;
using Constructor = std::function<Product(const Params&, const BuildContext&)>;

struct RegistryEntry {
  std::string type;
  Category category = Category::dataset;
  std::string doc;
  std::vector<ParamSchema> params;
  Constructor construct;
};

/// Type name -> constructor and parameter schema.
class Registry {
 public:
  // Throws NameCollision on a duplicate type name.
  void add(RegistryEntry entry);
  const RegistryEntry* find(std::string_view type) const;
  // Entries ordered by category, then type name.
  std::vector<const RegistryEntry*> entries() const;

  // Fills defaults. Throws UnknownType, TypeError, MissingField and UnknownKey.
  Params resolve(const ModuleDescriptor& d, const std::string& path) const;
  // Resolves, checks the category and constructs. Every failure becomes a
  // ConstructionError naming `path` and the type.
  Product construct(const ModuleDescriptor& d, Category expected, const std::string& path,
                    const BuildContext& ctx) const;

 private:
  std::map<std::string, RegistryEntry, std::less<>> entries_;
};

// Every built-in module.
const Registry& builtin_registry();

// Closest registered name by edit distance, if any is reasonably close.
std::optional<std::string> suggest_type(const Registry& r, std::string_view typo,
                                        std::optional<Category> category = std::nullopt);
std::size_t edit_distance(std::string_view a, std::string_view b);

struct Finding {
  std::string path;
  Errc code;
  std::string message;
  std::optional<std::string> suggestion;
};

struct ValidationReport {
  std::vector<Finding> errors;
  bool ok() const noexcept { return errors.empty(); }
  nlohmann::ordered_json to_json() const;
  // One "<Code> at <path>: <message>" line per finding.
  std::string to_text() const;
};

// Collects every problem instead of stopping at the first.
ValidationReport check_config(const ConfigDocument& doc, const Registry& registry);
// Parse failures become a single finding.
ValidationReport check_config_text(const std::string& text, const Registry& registry);

// Catalog of every registered type: category, doc and parameter schema.
nlohmann::ordered_json describe_registry(const Registry& registry);
// JSON Schema of the configuration document.
nlohmann::ordered_json config_json_schema(const Registry& registry);

// Rebuilds a model from its descriptor; weights are then overwritten by a checkpoint.
ModelFactory model_factory(const Registry& registry);

}  // namespace ember
