#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ember/checkpoint.hpp"
#include "ember/dataset.hpp"
#include "ember/models.hpp"
#include "ember/optim.hpp"
#include "ember/transforms.hpp"

namespace ember {

struct LoaderSpec {
  std::int64_t batch_size = 1;
  bool shuffle = false;
  std::uint64_t seed = 0;
  bool drop_last = false;
};

// Dataset indices visited in `epoch`: a permutation drawn from a stream
// seeded by (seed, epoch) when shuffling, the identity otherwise.
std::vector<std::int64_t> epoch_order(std::int64_t n, const LoaderSpec& spec, std::int64_t epoch);

// Streams collated batches to `fn`. The chain runs on every record before
// collation; failures are annotated with the dataset index. Throws EmptyDataset.
void for_each_batch(const Dataset& d, const TransformChain& chain, const LoaderSpec& spec, std::int64_t epoch,
                    const std::function<void(const Batch&)>& fn);
std::vector<Batch> iterate_batches(const Dataset& d, const TransformChain& chain, const LoaderSpec& spec,
                                   std::int64_t epoch);

enum class Phase { training, validation, testing };
enum class EventKind { epoch_end, workflow_end };

std::string_view phase_name(Phase p) noexcept;
std::string_view event_kind_name(EventKind k) noexcept;

// Insertion-ordered name -> value pairs.
using ScalarMap = std::vector<std::pair<std::string, double>>;

struct EpochEvent {
  EventKind kind = EventKind::epoch_end;
  std::string workflow_id;
  Phase phase = Phase::training;
  std::int64_t epoch = 0;
  ScalarMap losses;
  ScalarMap metrics;
  // First batch of the epoch: the fields entering the model and the fields it produced.
  Record sample_inputs;
  Record sample_outputs;
  // Parameters as they were when the event was emitted.
  std::shared_ptr<const ModelSnapshot> model_ref;

  // Looks up "losses.<name>" or "metrics.<name>".
  std::optional<double> find(std::string_view path) const;
};

class Hook {
 public:
  virtual ~Hook() = default;
  virtual std::string name() const = 0;
  virtual void on_event(const EpochEvent& e) = 0;
};

/// Synchronous dispatch from workflows to hooks. A failing hook is recorded
/// in the activity log and never interrupts the workflow.
class EventBus {
 public:
  explicit EventBus(std::ostream* mirror = nullptr) : mirror_(mirror) {}

  void subscribe(std::string workflow_id, std::vector<EventKind> kinds, std::shared_ptr<Hook> hook);
  void emit(const EpochEvent& e);

  void log(const std::string& line);
  const std::vector<std::string>& activity_log() const noexcept { return log_; }

 private:
  struct Subscription {
    std::string workflow_id;
    std::vector<EventKind> kinds;
    std::shared_ptr<Hook> hook;
  };
  std::vector<Subscription> subs_;
  std::vector<std::string> log_;
  std::ostream* mirror_;
};

struct WorkflowSpec {
  Phase kind = Phase::training;
  std::string workflow_id;
  std::shared_ptr<NamedModule> model;
  std::vector<NamedModule> losses;
  std::vector<NamedModule> metrics;
  std::optional<Optimizer> optimizer;  // training only
  LoaderSpec loader;
  std::int64_t epochs = 1;  // training only
};

/// One training, validation or testing loop bound to its data.
class Workflow {
 public:
  // Throws ConfigError when the WorkflowSpec does not fit its kind.
  Workflow(WorkflowSpec spec, Dataset data, TransformChain chain, EventBus* bus = nullptr);

  const WorkflowSpec& spec() const noexcept { return spec_; }
  NamedModule& model() { return *spec_.model; }

  // Training: one optimization pass. Validation and testing: one evaluation
  // pass. Emits and returns the epoch_end event.
  EpochEvent run_epoch(std::int64_t epoch);

  // Testing only: also writes "<index>_<output>.rtf" per record and output
  // into `dir` (created when absent).
  EpochEvent run_testing(const std::optional<std::filesystem::path>& dir);

  // Emits workflow_end.
  void finish(std::int64_t epochs_run);

 private:
  EpochEvent train_epoch(std::int64_t epoch);
  EpochEvent eval_epoch(std::int64_t epoch, const std::optional<std::filesystem::path>& export_dir);
  EpochEvent make_event(std::int64_t epoch) const;
  void emit(const EpochEvent& e);

  WorkflowSpec spec_;
  Dataset data_;
  TransformChain chain_;
  EventBus* bus_;
};

// All epochs in order, then workflow_end. Returns the epoch_end events.
std::vector<EpochEvent> run_training(WorkflowSpec spec, Dataset data, TransformChain chain, EventBus* bus = nullptr);
EpochEvent run_validation(WorkflowSpec spec, Dataset data, TransformChain chain, EventBus* bus = nullptr,
                          std::int64_t epoch = 0);
EpochEvent run_testing(WorkflowSpec spec, Dataset data, TransformChain chain, EventBus* bus = nullptr,
                       const std::optional<std::filesystem::path>& output_dir = std::nullopt);

}  // namespace ember
