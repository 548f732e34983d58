#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace myopia::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "myopia";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "MYOPIA_OUTPUT_DIR";

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Invalid configuration. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string> kExperimentKinds = {"kelly", "lottery", "sde", "arena", "hedge", "impact"};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::filesystem::path output_dir;
  std::vector<std::string> formats;  // subset of csv, json, svg
  json params;                       // fully resolved, defaults filled in

  bool wants(std::string_view format) const;
  /// The resolved configuration as JSON, as echoed into the manifest.
  json to_json() const;
};

/// Strict parse of a configuration document. Unknown keys anywhere are
/// rejected; "experiment" and "seed" are required; params are merged over
/// the experiment's defaults.
ExperimentConfig parse_config(const json& doc);

/// Default params block for an experiment kind. For arena and sde the
/// defaults of the nested model depend on its "type".
json default_params(std::string_view experiment, const json& user_params = json::object());

std::vector<std::string> preset_names();
/// Complete configuration document for a named preset.
json preset(std::string_view name);

/// Inputs gathered from the command line before validation.
struct CliRequest {
  std::string subcommand;                // experiment kind, or "run"
  std::optional<std::string> preset;
  std::optional<std::filesystem::path> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> output_dir;
  bool svg = false;
  std::vector<std::string> param_overrides;  // "dotted.key=value"
};

/// Layers preset, config file and flags (in that order) into one document
/// and parses it.
ExperimentConfig build_config(const CliRequest& request);

struct ResultRow {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string key;
  std::string metric;
  double value = 0.0;
};

struct RunOutput {
  std::vector<ResultRow> rows;
  json summary;
};

/// Computes an experiment without touching the filesystem.
RunOutput run_experiment(const ExperimentConfig& config);

/// Tidy CSV with 17 significant digits.
std::string format_results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(std::string_view text);

/// Runs an experiment and writes manifest.json, results.csv, summary.json
/// and optionally chart.svg into config.output_dir. The manifest is written
/// first with status "running" and rewritten as "ok" or "failed".
int run(const ExperimentConfig& config, std::ostream& log);

/// Static SVG line chart built from result rows whose key has the form
/// "label|x=<number>"; one series per (label, metric). Returns nullopt when
/// no row qualifies.
std::optional<std::string> render_chart(const std::vector<ResultRow>& rows, const std::string& title);

}  // namespace myopia::cli
