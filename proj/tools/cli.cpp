#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ember/builder.hpp"
#include "ember/hooks.hpp"
#include "ember/json_value.hpp"
#include "httplib.h"

namespace ember::cli {

namespace {

constexpr const char* kJson = "application/json";

bool is_config_error(Errc c) {
  switch (c) {
    case Errc::ParseError:
    case Errc::UnknownKey:
    case Errc::BadVersion:
    case Errc::MissingPhase:
    case Errc::MissingField:
    case Errc::TypeError:
    case Errc::ConfigError:
    case Errc::UnknownType:
    case Errc::ConstructionError:
      return true;
    default:
      return false;
  }
}

struct Loaded {
  ConfigDocument doc;
  BuildOptions opts;
};

// Reads and validates a config. Prints the diagnostics and returns nullopt on failure.
std::optional<Loaded> load_checked(const std::string& path, std::ostream& out, std::ostream& err,
                                   const std::function<void(ConfigDocument&)>& override_fn = {}) {
  Loaded l;
  try {
    l.doc = load_config(path);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return std::nullopt;
  }
  if (override_fn) override_fn(l.doc);
  const ValidationReport report = check_config(l.doc, builtin_registry());
  if (!report.ok()) {
    err << path << ": " << report.errors.size() << " problem(s)\n" << report.to_text();
    return std::nullopt;
  }
  l.opts.config_dir = std::filesystem::absolute(path).parent_path();
  l.opts.log = &out;
  return l;
}

int report_failure(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (const auto* ee = dynamic_cast<const Error*>(&e)) return is_config_error(ee->code()) ? kExitConfig : kExitRuntime;
  return kExitRuntime;
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(Errc::FileError, path, "cannot write");
}

}  // namespace

void install_catalog_routes(httplib::Server& server, const Registry& registry) {
  const std::string catalog = describe_registry(registry).dump(2) + "\n";
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Get("/catalog", [catalog](const httplib::Request&, httplib::Response& res) { res.set_content(catalog, kJson); });
  server.Post("/check", [&registry](const httplib::Request& req, httplib::Response& res) {
    res.set_content(check_config_text(req.body, registry).to_json().dump(2) + "\n", kJson);
  });
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ember: declarative training, validation and testing of small segmentation models"};
  app.name("ember");
  app.require_subcommand(1);

  std::string config, output_dir, checkpoint, output_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> epochs;
  bool export_predictions = false, as_json = false, schema = false;
  int port = 8765;
  std::string host = "127.0.0.1";

  auto* train = app.add_subcommand("train", "Train, validating after each epoch, then test if configured");
  train->add_option("config", config, "Configuration file")->required();
  train->add_option("--output-dir", output_dir, "Override output_dir");
  train->add_option("--seed", seed, "Override seed");
  train->add_option("--epochs", epochs, "Override the training epochs")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Evaluate a checkpoint on the validate phase");
  validate->add_option("config", config, "Configuration file")->required();
  validate->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  auto* test = app.add_subcommand("test", "Evaluate a checkpoint on the test phase");
  test->add_option("config", config, "Configuration file")->required();
  test->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  test->add_flag("--export-predictions", export_predictions, "Write model outputs under <output_dir>/predictions");

  auto* check = app.add_subcommand("check", "Validate a configuration without running it");
  check->add_option("config", config, "Configuration file")->required();
  check->add_flag("--json", as_json, "Print the report as JSON");

  auto* describe = app.add_subcommand("describe", "Print the module catalog as JSON");
  describe->add_option("--output", output_path, "Write to a file instead of stdout");
  describe->add_flag("--schema", schema, "Print the configuration JSON Schema instead");

  auto* serve = app.add_subcommand("serve-catalog", "Serve GET /catalog and POST /check over HTTP");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Bind address");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const Registry& registry = builtin_registry();
  try {
    if (*describe) {
      const auto doc = schema ? config_json_schema(registry) : describe_registry(registry);
      write_output(doc.dump(2) + "\n", output_path, out);
      return kExitOk;
    }
    if (*serve) {
      httplib::Server server;
      install_catalog_routes(server, registry);
      out << "serving catalog on http://" << host << ":" << port << "\n" << std::flush;
      if (!server.listen(host, port)) throw Error(Errc::FileError, host + ":" + std::to_string(port), "cannot listen");
      return kExitOk;
    }
    if (*check) {
      std::string text;
      try {
        text = read_text_file(config);
      } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
      }
      const ValidationReport report = check_config_text(text, registry);
      if (as_json) {
        out << report.to_json().dump(2) << "\n";
      } else if (report.ok()) {
        out << config << ": ok\n";
      } else {
        err << config << ": " << report.errors.size() << " problem(s)\n" << report.to_text();
      }
      return report.ok() ? kExitOk : kExitConfig;
    }

    auto loaded = load_checked(config, out, err, [&](ConfigDocument& doc) {
      if (!output_dir.empty()) doc.output_dir = std::filesystem::absolute(output_dir).string();
      if (seed) doc.seed = *seed;
      if (epochs && doc.train) doc.train->workflow.params["epochs"] = *epochs;
    });
    if (!loaded) return kExitConfig;
    EventBus bus(&err);
    if (*train) {
      const TrainOutcome r = run_train_command(loaded->doc, registry, bus, loaded->opts);
      out << "final checkpoint: " << r.final_checkpoint.string() << "\n";
      if (r.testing) out << "test: " << format_epoch_line(*r.testing) << "\n";
    } else {
      const std::string_view phase = *validate ? "validate" : "test";
      const EpochEvent e =
          run_eval_command(loaded->doc, phase, checkpoint, registry, bus, loaded->opts, export_predictions);
      out << phase << ": " << format_epoch_line(e) << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return report_failure(e, err);
  }
}

}  // namespace ember::cli
