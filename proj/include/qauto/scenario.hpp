#pragma once

// Scenario configuration, orchestration and output. A scenario is a JSON
// document validated against a schema defined in code (unknown keys are
// rejected, defaults filled), run deterministically from its seed, and
// written out as CSV tables and JSONL streams.

#include "qauto/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qauto::scenario {

using Json = nlohmann::json;

inline constexpr std::string_view kVersion = "0.1.0";

enum class Kind { Bb84, Entangle, Formation, Loop, Perturb, Combined };
std::string_view to_string(Kind kind);
/// Throws SchemaError.
Kind parse_kind(std::string_view name);

struct ScenarioConfig {
  Kind kind = Kind::Bb84;
  std::uint64_t seed = 0;
  Json resolved;  // validated document with every default filled

  /// 16 hex digits of FNV-1a-64 over the compact resolved document.
  std::string hash() const;
  /// Section of the resolved document for a module.
  const Json& section(std::string_view name) const { return resolved.at(std::string(name)); }
};

/// Validates a parsed document. SchemaError messages carry the key path,
/// e.g. "$.bb84.foo: unknown key".
ScenarioConfig parse_scenario(const Json& document);
/// Throws ParseError on malformed JSON.
ScenarioConfig parse_scenario_text(std::string_view text);
/// Throws IoError when the file cannot be read.
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// JSON Schema (draft 2020-12) describing the accepted documents.
Json json_schema();

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Throws SizeMismatch when the row width differs from the header.
  void add(std::vector<std::string> row);
};

struct RunLog {
  Json header;
  std::map<std::string, Table> tables;               // written as <name>.csv
  std::map<std::string, std::vector<Json>> streams;  // written as <name>.jsonl
  Json summary = Json::object();                     // flat scalar map
  std::optional<Json> error;
  std::optional<double> wallclock_seconds;  // kept out of the deterministic files

  bool ok() const { return !error.has_value(); }
  /// Exit status matching the recorded error (0 when none).
  int exit_status() const;
};

/// Runs the scenario. Module errors are caught and recorded in
/// RunLog::error instead of propagating.
RunLog run(const ScenarioConfig& config);

/// Writes every table and stream plus run.jsonl (header, summary, error)
/// into out_dir. Throws IoError.
void emit_plots(const RunLog& log, const std::filesystem::path& out_dir);

/// Seed of trial `index` in a --trials sweep.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t index);

/// Independent runs with derived seeds on up to `threads` workers
/// (0 = hardware concurrency). Results are ordered by trial index.
std::vector<RunLog> run_trials(const ScenarioConfig& config, std::size_t trials,
                               std::size_t threads = 0);

/// One trial_NNNN directory per run and a merged trials.csv.
void emit_trials(const std::vector<RunLog>& logs, const std::filesystem::path& out_dir);

}  // namespace qauto::scenario
