#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "ember/workflows.hpp"
#include "json.hpp"

namespace ember {

// "phase=<phase> epoch=<n>" followed by "name=value" for every loss and then
// every metric, values with six significant digits.
std::string format_epoch_line(const EpochEvent& e);

class LoggingHook : public Hook {
 public:
  explicit LoggingHook(std::ostream& out) : out_(out) {}
  std::string name() const override { return "LoggingHook"; }
  void on_event(const EpochEvent& e) override;

 private:
  std::ostream& out_;
};

// Shape, mean, min and max of each tensor field; other fields are skipped.
nlohmann::ordered_json digest(const Record& r);
nlohmann::ordered_json summary_line(const EpochEvent& e);

/// Appends one JSON object per epoch to a line-delimited file.
class SummaryHook : public Hook {
 public:
  explicit SummaryHook(std::filesystem::path path) : path_(std::move(path)) {}
  std::string name() const override { return "SummaryHook"; }
  void on_event(const EpochEvent& e) override;

 private:
  std::filesystem::path path_;
};

enum class WatchMode { min, max };

/// Checkpoints the model whenever the watched value strictly improves. The
/// first observed value always counts as an improvement.
class SaveBestModel : public Hook {
 public:
  SaveBestModel(std::filesystem::path dir, std::string watch, WatchMode mode, bool history = false);
  std::string name() const override { return "SaveBestModel"; }
  void on_event(const EpochEvent& e) override;

  std::optional<double> best() const noexcept { return best_; }
  int saves() const noexcept { return saves_; }

 private:
  std::filesystem::path dir_;
  std::string watch_;
  WatchMode mode_;
  bool history_;
  std::optional<double> best_;
  int saves_ = 0;
  bool warned_ = false;
};

}  // namespace ember
