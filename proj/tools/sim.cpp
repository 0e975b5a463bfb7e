// sim: command-line front end for the scenario runner.
//
//   sim <bb84|entangle|formation|loop|perturb|combined>
//       [--scenario FILE] [--seed U64] --out DIR [--trials N] [module flags]
//   sim schema
//
// Exit status: 0 success, 2 schema/config error, 3 runtime error, 4 I/O error.

#include "qauto/scenario.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using qauto::Error;
using qauto::ErrorCode;
using qauto::scenario::Json;

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t trials = 1;

  // bb84
  std::optional<std::uint64_t> n;
  std::optional<double> eve_fraction;
  // entangle
  std::optional<std::uint64_t> pairs;
  std::optional<std::string> state;
  std::vector<double> angles;
  std::optional<double> efficiency;
  std::optional<double> window;
};

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("sim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("SIM_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("SIM_LOG_LEVEL '{}' not recognised, using info", level);
  }
}

Json read_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

Json build_document(const std::string& sub, const Options& o) {
  Json doc = o.scenario.empty() ? Json::object() : read_document(o.scenario);
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "$: scenario must be a JSON object");
  if (!doc.contains("kind")) doc["kind"] = sub;
  if (doc["kind"] != sub) {
    throw Error(ErrorCode::SchemaError, "$.kind: scenario is '" + doc["kind"].dump() +
                                            "' but the subcommand is '" + sub + "'");
  }
  if (o.seed) doc["seed"] = *o.seed;
  const auto set = [&](const char* section, const char* key, const Json& v) {
    if (!doc.contains(section)) doc[section] = Json::object();
    doc[section][key] = v;
  };
  if (o.n) set("bb84", "n", *o.n);
  if (o.eve_fraction) set("bb84", "eve_fraction", *o.eve_fraction);
  if (o.pairs) set("entangle", "pairs", *o.pairs);
  if (o.state) set("entangle", "state", *o.state);
  if (!o.angles.empty()) {
    if (o.angles.size() != 4) {
      throw Error(ErrorCode::SchemaError, "--angles: expected four values a,a',b,b'");
    }
    set("entangle", "angles", o.angles);
  }
  if (o.efficiency) set("entangle", "efficiency", *o.efficiency);
  if (o.window) set("entangle", "window", *o.window);
  return doc;
}

void print_perturb_table(const qauto::scenario::RunLog& log) {
  const auto it = log.tables.find("perturb");
  if (it == log.tables.end()) return;
  const auto& t = it->second;
  const auto line = [](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) std::cout << (i ? "," : "") << cells[i];
    std::cout << '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
}

// Best effort: leave an error record next to the outputs.
void record_failure(const std::string& out, const Error& e) {
  if (out.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  std::ofstream f(std::filesystem::path(out) / "run.jsonl", std::ios::trunc);
  if (!f) return;
  f << Json{{"type", "error"},
            {"code", qauto::to_string(e.code())},
            {"exit_code", qauto::exit_code(e.error_class())},
            {"message", e.what()}}
           .dump()
    << '\n';
}

int run_subcommand(const std::string& sub, const Options& o) {
  namespace sc = qauto::scenario;
  const sc::ScenarioConfig cfg = sc::parse_scenario(build_document(sub, o));
  spdlog::debug("config {} seed {}", cfg.hash(), cfg.seed);

  if (o.trials > 1) {
    const auto logs = sc::run_trials(cfg, o.trials);
    sc::emit_trials(logs, o.out);
    for (const auto& l : logs) {
      if (!l.ok()) return l.exit_status();
    }
    spdlog::info("{} trials written to {}", logs.size(), o.out);
    return 0;
  }
  const auto log = sc::run(cfg);
  sc::emit_plots(log, o.out);
  if (cfg.kind == sc::Kind::Perturb) print_perturb_table(log);
  if (log.ok()) spdlog::info("outputs written to {}", o.out);
  return log.exit_status();
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Quantum-assisted automation and robotics simulator"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "scenario JSON file");
    sub->add_option("--seed", o.seed, "64-bit master seed (overrides the scenario)");
    sub->add_option("--out", o.out, "output directory")->required();
    sub->add_option("--trials", o.trials, "independent runs with derived seeds")
        ->check(CLI::PositiveNumber);
  };

  auto* bb84 = app.add_subcommand("bb84", "prepare-and-measure key distribution");
  common(bb84);
  bb84->add_option("--n", o.n, "photons sent");
  bb84->add_option("--eve-fraction", o.eve_fraction, "intercept-resend fraction");

  auto* entangle = app.add_subcommand("entangle", "entangled pairs and CHSH test");
  common(entangle);
  entangle->add_option("--pairs", o.pairs, "emitted pairs");
  entangle->add_option("--state", o.state, "psi+, psi-, phi+ or phi-");
  entangle->add_option("--angles", o.angles, "analyzer angles a,a',b,b' in degrees")
      ->delimiter(',');
  entangle->add_option("--efficiency", o.efficiency, "detector efficiency");
  entangle->add_option("--window", o.window, "coincidence window, seconds");

  auto* formation = app.add_subcommand("formation", "leader-follower formation keeping");
  common(formation);

  auto* loop = app.add_subcommand("loop", "gated closed feedback loop");
  common(loop);
  loop->add_option("--config", o.scenario, "alias of --scenario");

  auto* perturb = app.add_subcommand("perturb", "perturbation benchmark; prints the sweep CSV");
  common(perturb);

  auto* combined = app.add_subcommand("combined", "QKD-keyed, entanglement-triggered formation");
  common(combined);

  app.add_subcommand("schema", "print the scenario JSON schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qauto::exit_code(qauto::ErrorClass::Schema);
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  if (sub == "schema") {
    std::cout << qauto::scenario::json_schema().dump(2) << '\n';
    return 0;
  }
  try {
    return run_subcommand(sub, o);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    record_failure(o.out, e);
    return qauto::exit_code(e.error_class());
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return qauto::exit_code(qauto::ErrorClass::Runtime);
  }
}
