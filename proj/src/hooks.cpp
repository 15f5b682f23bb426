#include "ember/hooks.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace ember {

std::string format_epoch_line(const EpochEvent& e) {
  std::string line = "phase=" + std::string(phase_name(e.phase)) + " epoch=" + std::to_string(e.epoch);
  char buf[64];
  for (const auto* map : {&e.losses, &e.metrics}) {
    for (const auto& [name, value] : *map) {
      std::snprintf(buf, sizeof buf, "%#.6g", value);
      line += " " + name + "=" + buf;
    }
  }
  return line;
}

void LoggingHook::on_event(const EpochEvent& e) {
  if (e.kind != EventKind::epoch_end) return;
  out_ << format_epoch_line(e) << '\n';
  out_.flush();
  if (!out_) throw Error(Errc::FileError, "log stream", "write failed");
}

nlohmann::ordered_json digest(const Record& r) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [name, value] : r) {
    if (!value.is_tensor()) continue;
    const Tensor& t = value.tensor();
    double sum = 0;
    float lo = t[0], hi = t[0];
    for (float v : t.data()) {
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out[name] = {{"shape", t.shape()}, {"mean", sum / static_cast<double>(t.size())}, {"min", lo}, {"max", hi}};
  }
  return out;
}

nlohmann::ordered_json summary_line(const EpochEvent& e) {
  nlohmann::ordered_json j;
  j["workflow_id"] = e.workflow_id;
  j["phase"] = phase_name(e.phase);
  j["epoch"] = e.epoch;
  auto scalars = [](const ScalarMap& m) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m) o[k] = v;
    return o;
  };
  j["losses"] = scalars(e.losses);
  j["metrics"] = scalars(e.metrics);
  j["inputs"] = digest(e.sample_inputs);
  j["outputs"] = digest(e.sample_outputs);
  return j;
}

void SummaryHook::on_event(const EpochEvent& e) {
  if (e.kind != EventKind::epoch_end) return;
  const std::string line = summary_line(e).dump() + "\n";
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(Errc::FileError, path_.string(), "cannot open for appending");
  out << line;
  if (!out) throw Error(Errc::FileError, path_.string(), "write failed");
}

SaveBestModel::SaveBestModel(std::filesystem::path dir, std::string watch, WatchMode mode, bool history)
    : dir_(std::move(dir)), watch_(std::move(watch)), mode_(mode), history_(history) {
  if (!watch_.starts_with("losses.") && !watch_.starts_with("metrics.")) {
    throw Error(Errc::ConfigError, watch_, "watch must look like \"losses.<name>\" or \"metrics.<name>\"");
  }
}

void SaveBestModel::on_event(const EpochEvent& e) {
  if (e.kind != EventKind::epoch_end) return;
  const auto value = e.find(watch_);
  if (!value) {
    if (warned_) return;
    warned_ = true;
    throw Error(Errc::MissingWatchField, watch_, "not produced by workflow " + e.workflow_id);
  }
  const bool better = !best_ || (mode_ == WatchMode::min ? *value < *best_ : *value > *best_);
  if (!better) return;
  best_ = *value;
  if (!e.model_ref) throw Error(Errc::ConfigError, e.workflow_id, "event carries no model snapshot");
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(Errc::FileError, dir_.string(), ec.message());
  save_checkpoint(dir_ / "best.ckpt", *e.model_ref);
  if (history_) save_checkpoint(dir_ / ("best_epoch" + std::to_string(e.epoch) + ".ckpt"), *e.model_ref);
  ++saves_;
}

}  // namespace ember
