#include "ember/workflows.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "ember/io.hpp"
#include "ember/rng.hpp"

namespace ember {

std::vector<std::int64_t> epoch_order(std::int64_t n, const LoaderSpec& spec, std::int64_t epoch) {
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  if (spec.shuffle) {
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }
  return order;
}

void for_each_batch(const Dataset& d, const TransformChain& chain, const LoaderSpec& spec, std::int64_t epoch,
                    const std::function<void(const Batch&)>& fn) {
  if (d.empty()) throw Error(Errc::EmptyDataset, d.source_path() ? d.source_path()->string() : std::string());
  if (spec.batch_size < 1) throw Error(Errc::ConfigError, "batch_size", "must be at least 1");
  const auto order = epoch_order(d.size(), spec, epoch);
  const auto n = static_cast<std::int64_t>(order.size());
  for (std::int64_t start = 0; start < n; start += spec.batch_size) {
    const auto end = std::min(n, start + spec.batch_size);
    if (spec.drop_last && end - start < spec.batch_size) break;
    std::vector<Record> records;
    std::vector<std::int64_t> indices(order.begin() + start, order.begin() + end);
    for (auto idx : indices) {
      try {
        records.push_back(chain(d[idx]));
      } catch (const Error& e) {
        throw e.with_context("dataset index " + std::to_string(idx));
      }
    }
    Batch b;
    try {
      b = collate(records, indices);
    } catch (const Error& e) {
      throw e.with_context("batch starting at dataset index " + std::to_string(indices.front()));
    }
    fn(b);
  }
}

std::vector<Batch> iterate_batches(const Dataset& d, const TransformChain& chain, const LoaderSpec& spec,
                                   std::int64_t epoch) {
  std::vector<Batch> out;
  for_each_batch(d, chain, spec, epoch, [&](const Batch& b) { out.push_back(b); });
  return out;
}

std::string_view phase_name(Phase p) noexcept {
  switch (p) {
    case Phase::training: return "training";
    case Phase::validation: return "validation";
    case Phase::testing: return "testing";
  }
  return "unknown";
}

std::string_view event_kind_name(EventKind k) noexcept {
  return k == EventKind::epoch_end ? "epoch_end" : "workflow_end";
}

std::optional<double> EpochEvent::find(std::string_view path) const {
  const ScalarMap* map = nullptr;
  std::string_view name;
  if (path.starts_with("losses.")) {
    map = &losses;
    name = path.substr(7);
  } else if (path.starts_with("metrics.")) {
    map = &metrics;
    name = path.substr(8);
  } else {
    return std::nullopt;
  }
  for (const auto& [k, v] : *map) {
    if (k == name) return v;
  }
  return std::nullopt;
}

void EventBus::subscribe(std::string workflow_id, std::vector<EventKind> kinds, std::shared_ptr<Hook> hook) {
  subs_.push_back(Subscription{std::move(workflow_id), std::move(kinds), std::move(hook)});
}

void EventBus::emit(const EpochEvent& e) {
  for (const auto& s : subs_) {
    if (s.workflow_id != e.workflow_id) continue;
    if (std::find(s.kinds.begin(), s.kinds.end(), e.kind) == s.kinds.end()) continue;
    try {
      s.hook->on_event(e);
    } catch (const std::exception& ex) {
      log("hook " + s.hook->name() + " failed on " + std::string(event_kind_name(e.kind)) + " of " + e.workflow_id +
          " epoch " + std::to_string(e.epoch) + ": " + ex.what());
    }
  }
}

void EventBus::log(const std::string& line) {
  log_.push_back(line);
  if (mirror_) *mirror_ << line << '\n';
}

namespace {

// Name -> running batch-weighted sum, in first-seen order.
class Accumulator {
 public:
  void add(const std::string& name, double value, std::int64_t weight) {
    for (auto& [k, sum] : sums_) {
      if (k == name) {
        sum += value * static_cast<double>(weight);
        return;
      }
    }
    sums_.emplace_back(name, value * static_cast<double>(weight));
  }
  void count(std::int64_t n) { total_ += n; }
  ScalarMap means() const {
    ScalarMap out;
    for (const auto& [k, sum] : sums_) out.emplace_back(k, total_ > 0 ? sum / static_cast<double>(total_) : 0.0);
    return out;
  }

 private:
  ScalarMap sums_;
  std::int64_t total_ = 0;
};

// Resolves field names to Vars: model outputs first, then batch tensors as constants.
class Router {
 public:
  Router(Tape& tape, const Record& entries) : tape_(tape), entries_(entries) {}

  void add_output(const std::string& name, Var v) { vars_[name] = v; }

  bool has(const std::string& name) const { return vars_.count(name) || entries_.contains(name); }

  Var get(const std::string& name) {
    if (auto it = vars_.find(name); it != vars_.end()) return it->second;
    const Value& v = entries_.at(name);
    if (!v.is_tensor()) throw Error(Errc::NotATensor, name);
    Var var = tape_.constant(v.tensor());
    vars_[name] = var;
    return var;
  }

  std::vector<Var> gather(const std::vector<std::string>& names) {
    std::vector<Var> out;
    for (const auto& n : names) out.push_back(get(n));
    return out;
  }

 private:
  Tape& tape_;
  const Record& entries_;
  std::map<std::string, Var> vars_;
};

double scalar_output(const NamedModule& m, std::size_t i, const Var& v) {
  if (v.value().size() != 1) {
    throw Error(Errc::ShapeError, m.output_names()[i], "loss and metric outputs must be scalar, got " + to_string(v.shape()));
  }
  return static_cast<double>(v.value()[0]);
}

std::vector<Var> run_module(const NamedModule& m, Tape& tape, Router& router) {
  const auto inputs = router.gather(m.input_names());
  const auto params = m.bind_parameters(tape, false);
  return m.forward(tape, inputs, params);
}

// Model forward on `tape`, registering outputs with the router.
std::vector<Var> run_model(const NamedModule& model, Tape& tape, const Batch& b, Router& router, std::vector<Var>& params,
                           bool trainable) {
  for (const auto& name : model.output_names()) {
    if (b.entries.contains(name)) throw Error(Errc::OutputCollision, name, "model " + model.name());
  }
  const auto inputs = router.gather(model.input_names());
  params = model.bind_parameters(tape, trainable);
  auto outs = model.forward(tape, inputs, params);
  for (std::size_t i = 0; i < outs.size(); ++i) router.add_output(model.output_names()[i], outs[i]);
  return outs;
}

Record output_record(const NamedModule& model, const std::vector<Var>& outs) {
  Record r;
  for (std::size_t i = 0; i < outs.size(); ++i) r.set(model.output_names()[i], outs[i].value());
  return r;
}

void evaluate_metrics(const std::vector<NamedModule>& metrics, const Batch& b, const Record& outputs, Accumulator& acc,
                      bool skip_missing) {
  Tape tape(false);
  Router router(tape, b.entries);
  for (const auto& [name, value] : outputs) router.add_output(name, tape.constant(value.tensor()));
  for (const auto& m : metrics) {
    if (skip_missing && !std::all_of(m.input_names().begin(), m.input_names().end(),
                                     [&](const std::string& n) { return router.has(n); })) {
      continue;
    }
    const auto outs = run_module(m, tape, router);
    for (std::size_t i = 0; i < outs.size(); ++i) acc.add(m.output_names()[i], scalar_output(m, i, outs[i]), b.batch_size);
  }
}

std::string batch_context(std::int64_t epoch, std::int64_t batch) {
  return "epoch " + std::to_string(epoch) + " batch " + std::to_string(batch);
}

}  // namespace

Workflow::Workflow(WorkflowSpec spec, Dataset data, TransformChain chain, EventBus* bus)
    : spec_(std::move(spec)), data_(std::move(data)), chain_(std::move(chain)), bus_(bus) {
  const std::string& id = spec_.workflow_id;
  if (!spec_.model) throw Error(Errc::ConfigError, id, "workflow has no model");
  if (spec_.loader.batch_size < 1) throw Error(Errc::ConfigError, id, "batch_size must be at least 1");
  if (spec_.kind == Phase::training) {
    if (spec_.epochs < 1) throw Error(Errc::ConfigError, id, "epochs must be positive");
    if (spec_.losses.empty()) throw Error(Errc::ConfigError, id, "training needs at least one loss");
    if (!spec_.optimizer) throw Error(Errc::ConfigError, id, "training needs an optimizer");
  } else if (spec_.optimizer) {
    throw Error(Errc::ConfigError, id, "only training workflows take an optimizer");
  }
  std::vector<std::string> names = spec_.model->output_names();
  for (const auto* group : {&spec_.losses, &spec_.metrics}) {
    for (const auto& m : *group) {
      for (const auto& n : m.output_names()) {
        if (std::find(names.begin(), names.end(), n) != names.end()) throw Error(Errc::OutputCollision, n, id);
        names.push_back(n);
      }
    }
  }
}

EpochEvent Workflow::make_event(std::int64_t epoch) const {
  EpochEvent e;
  e.workflow_id = spec_.workflow_id;
  e.phase = spec_.kind;
  e.epoch = epoch;
  e.model_ref = std::make_shared<const ModelSnapshot>(ModelSnapshot::of(*spec_.model));
  return e;
}

void Workflow::emit(const EpochEvent& e) {
  if (bus_) bus_->emit(e);
}

EpochEvent Workflow::run_epoch(std::int64_t epoch) {
  return spec_.kind == Phase::training ? train_epoch(epoch) : eval_epoch(epoch, std::nullopt);
}

EpochEvent Workflow::run_testing(const std::optional<std::filesystem::path>& dir) {
  if (spec_.kind != Phase::testing) throw Error(Errc::ConfigError, spec_.workflow_id, "not a testing workflow");
  return eval_epoch(0, dir);
}

EpochEvent Workflow::train_epoch(std::int64_t epoch) {
  NamedModule& model = *spec_.model;
  Accumulator losses, metrics;
  Record sample_in, sample_out;
  std::int64_t batch_no = 0;
  for_each_batch(data_, chain_, spec_.loader, epoch, [&](const Batch& b) {
    try {
      Tape tape(true);
      Router router(tape, b.entries);
      std::vector<Var> params;
      const auto outs = run_model(model, tape, b, router, params, true);

      std::optional<Var> total;
      for (const auto& loss : spec_.losses) {
        const auto louts = run_module(loss, tape, router);
        for (std::size_t i = 0; i < louts.size(); ++i) {
          losses.add(loss.output_names()[i], scalar_output(loss, i, louts[i]), b.batch_size);
          const Var v = reshape(louts[i], {});
          total = total ? *total + v : v;
        }
      }
      const Gradients grads = tape.backward(*total);
      auto& ps = model.parameters();
      for (std::size_t i = 0; i < ps.size(); ++i) ps[i].grad = grads.of(params[i]);

      const Record produced = output_record(model, outs);
      evaluate_metrics(spec_.metrics, b, produced, metrics, false);
      spec_.optimizer->step(ps);
      losses.count(b.batch_size);
      metrics.count(b.batch_size);
      if (batch_no == 0) {
        sample_in = b.entries;
        sample_out = produced;
      }
    } catch (const Error& e) {
      throw e.with_context(batch_context(epoch, batch_no));
    }
    ++batch_no;
  });
  EpochEvent e = make_event(epoch);
  e.losses = losses.means();
  e.metrics = metrics.means();
  e.sample_inputs = std::move(sample_in);
  e.sample_outputs = std::move(sample_out);
  emit(e);
  return e;
}

EpochEvent Workflow::eval_epoch(std::int64_t epoch, const std::optional<std::filesystem::path>& export_dir) {
  const NamedModule& model = *spec_.model;
  const bool testing = spec_.kind == Phase::testing;
  if (export_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*export_dir, ec);
    if (ec) throw Error(Errc::FileError, export_dir->string(), ec.message());
  }
  Accumulator losses, metrics;
  Record sample_in, sample_out;
  std::int64_t batch_no = 0;
  for_each_batch(data_, chain_, spec_.loader, epoch, [&](const Batch& b) {
    try {
      Tape tape(false);
      Router router(tape, b.entries);
      std::vector<Var> params;
      const auto outs = run_model(model, tape, b, router, params, false);
      const Record produced = output_record(model, outs);
      // Losses are plain evaluations here, so they share the metric path.
      evaluate_metrics(spec_.losses, b, produced, losses, testing);
      evaluate_metrics(spec_.metrics, b, produced, metrics, testing);
      losses.count(b.batch_size);
      metrics.count(b.batch_size);
      if (export_dir) {
        for (std::size_t k = 0; k < outs.size(); ++k) {
          const Tensor& t = outs[k].value();
          const Shape item_shape(t.shape().begin() + 1, t.shape().end());
          const auto stride = numel(item_shape);
          for (std::int64_t i = 0; i < b.batch_size; ++i) {
            std::vector<float> data(t.data().begin() + i * stride, t.data().begin() + (i + 1) * stride);
            char name[32];
            std::snprintf(name, sizeof name, "%06lld_", static_cast<long long>(b.source_indices[static_cast<std::size_t>(i)]));
            write_rtf(*export_dir / (name + model.output_names()[k] + ".rtf"), Tensor(item_shape, std::move(data)));
          }
        }
      }
      if (batch_no == 0) {
        sample_in = b.entries;
        sample_out = produced;
      }
    } catch (const Error& e) {
      throw e.with_context(batch_context(epoch, batch_no));
    }
    ++batch_no;
  });
  EpochEvent e = make_event(epoch);
  e.losses = losses.means();
  e.metrics = metrics.means();
  e.sample_inputs = std::move(sample_in);
  e.sample_outputs = std::move(sample_out);
  emit(e);
  return e;
}

void Workflow::finish(std::int64_t epochs_run) {
  EpochEvent e = make_event(epochs_run > 0 ? epochs_run - 1 : 0);
  e.kind = EventKind::workflow_end;
  emit(e);
}

std::vector<EpochEvent> run_training(WorkflowSpec spec, Dataset data, TransformChain chain, EventBus* bus) {
  if (spec.kind != Phase::training) throw Error(Errc::ConfigError, spec.workflow_id, "not a training workflow");
  Workflow w(std::move(spec), std::move(data), std::move(chain), bus);
  std::vector<EpochEvent> history;
  for (std::int64_t epoch = 0; epoch < w.spec().epochs; ++epoch) history.push_back(w.run_epoch(epoch));
  w.finish(w.spec().epochs);
  return history;
}

EpochEvent run_validation(WorkflowSpec spec, Dataset data, TransformChain chain, EventBus* bus, std::int64_t epoch) {
  if (spec.kind != Phase::validation) throw Error(Errc::ConfigError, spec.workflow_id, "not a validation workflow");
  Workflow w(std::move(spec), std::move(data), std::move(chain), bus);
  return w.run_epoch(epoch);
}

EpochEvent run_testing(WorkflowSpec spec, Dataset data, TransformChain chain, EventBus* bus,
                       const std::optional<std::filesystem::path>& output_dir) {
  Workflow w(std::move(spec), std::move(data), std::move(chain), bus);
  return w.run_testing(output_dir);
}

}  // namespace ember
