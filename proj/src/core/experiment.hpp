#pragma once

#include <optional>
#include <string>
#include <vector>

namespace chivar {

struct RunOptions {
  std::string out_dir;                 // overrides config "output" when set
  std::optional<uint64_t> seed;        // overrides config "seed"
  int threads = 1;
  bool assert_mode = false;            // evaluate the config's assert block
};

struct RunResult {
  bool config_ok = false;
  int numeric_failures = 0;            // populated in assert mode
  std::string manifest_path;
  std::string error_report_json;       // set when config_ok is false
};

// Validates a config JSON text; returns {"valid":..., "errors":[{field,message}]}.
std::string validate_experiment_json(const std::string& config_text);

// Loads, validates and runs a config file. Deterministic for a fixed
// (config, seed): output bytes do not depend on the thread count.
RunResult run_experiment_file(const std::string& config_path, const RunOptions& options);
RunResult run_experiment_json(const std::string& config_text, const RunOptions& options);

std::vector<std::string> experiment_kinds();

}  // namespace chivar
