#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pointseg/metrics.hpp"
#include "pointseg/synthgen.hpp"
#include "pointseg/trainer.hpp"

namespace pointseg {

struct EvalConfig {
  double threshold = 0.5;
  Aggregation aggregation = Aggregation::micro;
};

struct PolyConfig {
  double threshold = 0.5;
  double simplify_tol = 0.0;
};

struct AblateConfig {
  std::vector<uint64_t> seeds = {1, 2, 3};
};

// Everything the CLI can tune, grouped the way the JSON file is.
struct RunConfig {
  SceneConfig scene;
  TrainConfig train;  // train.label carries the pseudo-label settings
  EvalConfig eval;
  PolyConfig poly;
  AblateConfig ablate;
};

// One settable key: dotted path, default (rendered from a default
// RunConfig), help text, and the setter the parser dispatches to.
struct ConfigKey {
  std::string key;
  std::string def;
  std::string help;
  std::function<void(RunConfig&, const nlohmann::json&)> set;
};

const std::vector<ConfigKey>& config_keys();

// Strict parse: two-level JSON object, unknown keys rejected by path.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Key/default/help table for --help output.
std::string config_help_text();

Aggregation aggregation_from(const std::string& name);
const char* to_string(Aggregation agg);

}  // namespace pointseg
