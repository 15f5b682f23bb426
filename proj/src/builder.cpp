#include "ember/builder.hpp"

#include <iostream>

#include "ember/checkpoint.hpp"
#include "ember/rng.hpp"

namespace ember {

namespace {

std::filesystem::path against(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <class T>
T take(Product p) {
  return std::get<T>(std::move(p));
}

}  // namespace

std::filesystem::path resolved_data_root(const ConfigDocument& doc, const BuildOptions& opts) {
  return against(opts.config_dir, doc.data_root).lexically_normal();
}

std::filesystem::path resolved_output_dir(const ConfigDocument& doc, const BuildOptions& opts) {
  return against(opts.config_dir, doc.output_dir).lexically_normal();
}

BuiltPhase build_phase(const ConfigDocument& doc, std::string_view phase, const Registry& registry, EventBus& bus,
                       const BuildOptions& opts, std::shared_ptr<NamedModule> model) {
  const PhaseConfig* p = doc.phase(phase);
  const std::string base = "phases." + std::string(phase);
  if (!p) throw Error(Errc::MissingPhase, base, "the configuration has no such phase");

  BuildContext ctx;
  ctx.data_root = resolved_data_root(doc, opts);
  ctx.output_dir = resolved_output_dir(doc, opts);
  ctx.phase = std::string(phase);
  ctx.log = opts.log;
  auto make = [&](const ModuleDescriptor& d, Category c, const std::string& path) {
    ctx.seed = mix_seed(doc.seed, path);
    return registry.construct(d, c, path, ctx);
  };

  BuiltPhase out;
  out.name = std::string(phase);
  out.dataset = take<Dataset>(make(p->dataset, Category::dataset, base + ".dataset"));
  std::vector<Transform> stages;
  for (std::size_t i = 0; i < p->transforms.size(); ++i) {
    const std::string path = base + ".transforms[" + std::to_string(i) + "]";
    stages.push_back(take<Transform>(make(p->transforms[i], Category::transform, path)));
  }
  out.chain = TransformChain(std::move(stages));
  out.spec.model = model ? std::move(model)
                         : std::make_shared<NamedModule>(take<NamedModule>(make(p->model, Category::model, base + ".model")));
  for (std::size_t i = 0; i < p->losses.size(); ++i) {
    const std::string path = base + ".losses[" + std::to_string(i) + "]";
    out.spec.losses.push_back(take<NamedModule>(make(p->losses[i], Category::loss, path)));
  }
  for (std::size_t i = 0; i < p->metrics.size(); ++i) {
    const std::string path = base + ".metrics[" + std::to_string(i) + "]";
    out.spec.metrics.push_back(take<NamedModule>(make(p->metrics[i], Category::metric, path)));
  }
  if (p->optimizer) out.spec.optimizer = take<Optimizer>(make(*p->optimizer, Category::optimizer, base + ".optimizer"));

  std::filesystem::create_directories(ctx.output_dir);
  for (std::size_t i = 0; i < p->hooks.size(); ++i) {
    const std::string path = base + ".hooks[" + std::to_string(i) + "]";
    auto hook = take<std::shared_ptr<Hook>>(make(p->hooks[i], Category::hook, path));
    bus.subscribe(out.name, {EventKind::epoch_end, EventKind::workflow_end}, hook);
    out.hooks.push_back(std::move(hook));
  }

  out.settings = take<WorkflowSettings>(make(p->workflow, Category::workflow, base + ".workflow"));
  const Phase expected = phase == "train" ? Phase::training : phase == "validate" ? Phase::validation : Phase::testing;
  if (out.settings.kind != expected) {
    throw Error(Errc::ConfigError, base + ".workflow.type", p->workflow.type + " cannot run the " + out.name + " phase");
  }
  out.spec.kind = out.settings.kind;
  out.spec.workflow_id = out.name;
  out.spec.loader = out.settings.loader;
  out.spec.epochs = out.settings.epochs;
  return out;
}

namespace {

Workflow make_workflow(BuiltPhase& b, EventBus& bus) {
  try {
    return Workflow(b.spec, b.dataset, b.chain, &bus);
  } catch (const Error& e) {
    throw e.with_context("phases." + b.name);
  }
}

std::optional<std::filesystem::path> export_dir(const ConfigDocument& doc, const BuildOptions& opts, bool on) {
  if (!on) return std::nullopt;
  return resolved_output_dir(doc, opts) / "predictions";
}

}  // namespace

TrainOutcome run_train_command(const ConfigDocument& doc, const Registry& registry, EventBus& bus,
                               const BuildOptions& opts) {
  BuiltPhase train = build_phase(doc, "train", registry, bus, opts);
  std::optional<BuiltPhase> validate;
  if (doc.validate) validate = build_phase(doc, "validate", registry, bus, opts, train.spec.model);

  TrainOutcome out;
  out.model = train.spec.model;
  Workflow trainer = make_workflow(train, bus);
  std::optional<Workflow> validator;
  if (validate) validator.emplace(make_workflow(*validate, bus));

  const std::int64_t epochs = train.spec.epochs;
  for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
    out.training.push_back(trainer.run_epoch(epoch));
    if (validator) out.validation.push_back(validator->run_epoch(epoch));
  }
  trainer.finish(epochs);
  if (validator) validator->finish(epochs);

  out.final_checkpoint = resolved_output_dir(doc, opts) / "final.ckpt";
  save_model(*out.model, out.final_checkpoint);

  if (doc.test) {
    BuiltPhase test = build_phase(doc, "test", registry, bus, opts, out.model);
    Workflow tester = make_workflow(test, bus);
    out.testing = tester.run_testing(export_dir(doc, opts, test.settings.export_predictions));
    tester.finish(1);
  }
  return out;
}

EpochEvent run_eval_command(const ConfigDocument& doc, std::string_view phase, const std::filesystem::path& checkpoint,
                            const Registry& registry, EventBus& bus, const BuildOptions& opts, bool export_predictions) {
  auto model = std::make_shared<NamedModule>(load_model(checkpoint, model_factory(registry)));
  BuiltPhase built = build_phase(doc, phase, registry, bus, opts, model);
  Workflow w = make_workflow(built, bus);
  EpochEvent e = built.spec.kind == Phase::testing
                     ? w.run_testing(export_dir(doc, opts, export_predictions || built.settings.export_predictions))
                     : w.run_epoch(0);
  w.finish(1);
  return e;
}

}  // namespace ember
