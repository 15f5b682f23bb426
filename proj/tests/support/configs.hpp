#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace testing {

inline std::string golden_config_text() {
  std::ifstream in(std::string(EMBER_SOURCE_DIR) + "/configs/golden.json");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline nlohmann::ordered_json golden_config() { return nlohmann::ordered_json::parse(golden_config_text()); }

struct BrokenConfig {
  std::string name;
  std::string text;
  std::string path;  // location the diagnostic must name
};

// The golden config with one defect each.
inline std::vector<BrokenConfig> broken_configs() {
  std::vector<BrokenConfig> out;
  auto add = [&](std::string name, std::string path, auto edit) {
    auto j = golden_config();
    edit(j);
    out.push_back({std::move(name), j.dump(2), std::move(path)});
  };
  add("typo type", "phases.train.model", [](auto& j) { j["phases"]["train"]["model"]["type"] = "UNnet"; });
  add("wrong param type", "phases.train.workflow.params.epochs",
      [](auto& j) { j["phases"]["train"]["workflow"]["params"]["epochs"] = "ten"; });
  add("missing optimizer", "phases.train.optimizer", [](auto& j) { j["phases"]["train"].erase("optimizer"); });
  add("unknown key", "phases.train.hookz", [](auto& j) {
    j["phases"]["train"]["hookz"] = j["phases"]["train"]["hooks"];
    j["phases"]["train"].erase("hooks");
  });
  add("bad version", "version", [](auto& j) { j["version"] = "2.0"; });
  add("empty phases", "phases", [](auto& j) { j["phases"] = nlohmann::ordered_json::object(); });
  return out;
}

}  // namespace testing
