#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ember/config.hpp"
#include "ember/registry.hpp"
#include "ember/workflows.hpp"

namespace ember {

struct BuildOptions {
  // Relative data_root and output_dir resolve against this directory.
  std::filesystem::path config_dir = ".";
  std::ostream* log = nullptr;  // LoggingHook target; stdout when null
};

// One phase of a configuration, instantiated and ready to run.
struct BuiltPhase {
  std::string name;  // also the workflow id hooks subscribe to
  Dataset dataset;
  TransformChain chain;
  WorkflowSpec spec;
  WorkflowSettings settings;
  std::vector<std::shared_ptr<Hook>> hooks;
};

std::filesystem::path resolved_data_root(const ConfigDocument& doc, const BuildOptions& opts);
std::filesystem::path resolved_output_dir(const ConfigDocument& doc, const BuildOptions& opts);

// Instantiates dataset, transforms, model, losses, metrics, optimizer, hooks
// and workflow settings in that order and subscribes the hooks to `bus`.
// Each module draws its seed from mix_seed(doc.seed, "<module path>").
// A non-null `model` replaces the phase's own model descriptor.
// Throws MissingPhase, ConfigError and ConstructionError.
BuiltPhase build_phase(const ConfigDocument& doc, std::string_view phase, const Registry& registry, EventBus& bus,
                       const BuildOptions& opts = {}, std::shared_ptr<NamedModule> model = nullptr);

struct TrainOutcome {
  std::vector<EpochEvent> training;
  std::vector<EpochEvent> validation;  // one per epoch when a validate phase exists
  std::optional<EpochEvent> testing;
  std::filesystem::path final_checkpoint;
  std::shared_ptr<NamedModule> model;
};

// Trains, validating after every epoch when a validate phase is present,
// writes <output_dir>/final.ckpt and finally runs the test phase if present.
TrainOutcome run_train_command(const ConfigDocument& doc, const Registry& registry, EventBus& bus,
                               const BuildOptions& opts = {});

// Evaluates the checkpointed model on the validate or test phase.
EpochEvent run_eval_command(const ConfigDocument& doc, std::string_view phase, const std::filesystem::path& checkpoint,
                            const Registry& registry, EventBus& bus, const BuildOptions& opts = {},
                            bool export_predictions = false);

}  // namespace ember
