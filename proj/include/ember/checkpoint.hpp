#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ember/models.hpp"

namespace ember {

/// Deep copy of a model's parameters plus the descriptor needed to rebuild it.
struct ModelSnapshot {
  ModuleDescriptor descriptor;
  std::vector<std::pair<std::string, Tensor>> params;

  static ModelSnapshot of(const NamedModule& m);
};

// Rebuilds a module from its descriptor; throws UnknownModelType for unknown types.
using ModelFactory = std::function<NamedModule(const ModuleDescriptor&)>;

namespace checkpoint {

inline constexpr std::uint32_t kVersion = 1;

// "EISN", u32 version, u32 header length, JSON header, float32 payload. All little-endian.
std::vector<unsigned char> encode(const ModelSnapshot& s);
// Throws BadMagic, VersionMismatch, ParseError, TruncatedData.
ModelSnapshot decode(const std::vector<unsigned char>& bytes);

}  // namespace checkpoint

void save_checkpoint(const std::filesystem::path& path, const ModelSnapshot& s);
ModelSnapshot load_checkpoint(const std::filesystem::path& path);

void save_model(const NamedModule& m, const std::filesystem::path& path);

// Builds the module through `factory` and copies the stored parameters in.
// Throws ParamTableMismatch when names, order or shapes differ.
NamedModule restore_model(const ModelSnapshot& s, const ModelFactory& factory);
NamedModule load_model(const std::filesystem::path& path, const ModelFactory& factory);

}  // namespace ember
