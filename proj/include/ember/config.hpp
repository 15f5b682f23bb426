#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ember/models.hpp"
#include "json.hpp"

namespace ember {

struct PhaseConfig {
  ModuleDescriptor dataset;
  std::vector<ModuleDescriptor> transforms;  // applied in listed order
  ModuleDescriptor model;
  std::vector<ModuleDescriptor> losses;
  std::vector<ModuleDescriptor> metrics;
  std::optional<ModuleDescriptor> optimizer;  // train only
  ModuleDescriptor workflow;
  std::vector<ModuleDescriptor> hooks;
};

inline constexpr std::string_view kConfigVersion = "1.0";
inline constexpr std::string_view kPhaseNames[] = {"train", "validate", "test"};

struct ConfigDocument {
  std::string version{kConfigVersion};
  std::uint64_t seed = 42;
  std::string data_root = ".";
  std::string output_dir = "./output";
  std::optional<PhaseConfig> train;
  std::optional<PhaseConfig> validate;
  std::optional<PhaseConfig> test;

  // `name` is one of kPhaseNames; anything else yields nullptr.
  const PhaseConfig* phase(std::string_view name) const;
  PhaseConfig* phase(std::string_view name);
};

// Strict parse. Every error names the offending location as a dotted path
// ("phases.train.optimizer", "phases.test.transforms[1].type").
// Throws ParseError, UnknownKey, BadVersion, MissingPhase, MissingField,
// TypeError and ConfigError.
ConfigDocument parse_config(const std::string& text);
ConfigDocument load_config(const std::filesystem::path& path);

// Canonical form: every top-level key present, phases in train, validate,
// test order and every descriptor list written out even when empty.
nlohmann::ordered_json config_to_json(const ConfigDocument& doc);
std::string serialize_config(const ConfigDocument& doc);

}  // namespace ember
