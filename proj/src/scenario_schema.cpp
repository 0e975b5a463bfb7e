#include "qauto/rng.hpp"
#include "qauto/scenario.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace qauto::scenario {

namespace {

enum class Type { Number, Integer, Boolean, String, Array, Object };

struct Node {
  Type type = Type::Number;
  std::string description;
  Json default_value;  // null: required
  std::optional<double> minimum;
  std::optional<double> maximum;
  bool exclusive_minimum = false;
  bool exclusive_maximum = false;
  std::vector<std::string> enumeration;
  std::vector<std::pair<std::string, Node>> properties;
  std::shared_ptr<const Node> items;
  std::optional<std::size_t> min_items;
  std::optional<std::size_t> max_items;
};

Node number(std::string desc, Json def, std::optional<double> lo = {},
            std::optional<double> hi = {}, bool excl_lo = false, bool excl_hi = false) {
  Node n;
  n.type = Type::Number;
  n.description = std::move(desc);
  n.default_value = std::move(def);
  n.minimum = lo;
  n.maximum = hi;
  n.exclusive_minimum = excl_lo;
  n.exclusive_maximum = excl_hi;
  return n;
}

Node probability(std::string desc, double def) { return number(std::move(desc), def, 0.0, 1.0); }
Node positive(std::string desc, double def) { return number(std::move(desc), def, 0.0, {}, true); }
Node non_negative(std::string desc, double def) { return number(std::move(desc), def, 0.0); }

Node integer(std::string desc, Json def, std::optional<double> lo = {},
             std::optional<double> hi = {}) {
  Node n = number(std::move(desc), std::move(def), lo, hi);
  n.type = Type::Integer;
  return n;
}

Node boolean(std::string desc, bool def) {
  Node n;
  n.type = Type::Boolean;
  n.description = std::move(desc);
  n.default_value = def;
  return n;
}

Node string_enum(std::string desc, Json def, std::vector<std::string> values) {
  Node n;
  n.type = Type::String;
  n.description = std::move(desc);
  n.default_value = std::move(def);
  n.enumeration = std::move(values);
  return n;
}

Node array(std::string desc, Json def, Node item, std::optional<std::size_t> min_items = {},
           std::optional<std::size_t> max_items = {}) {
  Node n;
  n.type = Type::Array;
  n.description = std::move(desc);
  n.default_value = std::move(def);
  n.items = std::make_shared<const Node>(std::move(item));
  n.min_items = min_items;
  n.max_items = max_items;
  return n;
}

Node object(std::string desc, std::vector<std::pair<std::string, Node>> props) {
  Node n;
  n.type = Type::Object;
  n.description = std::move(desc);
  n.default_value = Json::object();
  n.properties = std::move(props);
  return n;
}

Node vec3(std::string desc, Json def) {
  return array(std::move(desc), std::move(def), number("component", nullptr), 3, 3);
}

Node transfer_function(std::string desc, std::vector<double> num, std::vector<double> den) {
  Node n = object(std::move(desc),
                  {{"num", array("numerator coefficients, ascending powers of s", num,
                                 number("coefficient", nullptr), 1)},
                   {"den", array("denominator coefficients, ascending powers of s", den,
                                 number("coefficient", nullptr), 1)}});
  return n;
}

const Node& root_schema() {
  static const Node root = [] {
    const double h = std::sqrt(3.0) / 2.0;

    Node bb84 = object(
        "prepare-and-measure key distribution",
        {{"n", integer("photons sent by Alice", 100000, 1)},
         {"eve_fraction", probability("fraction of photons intercepted and resent (0 = no Eve)", 0.0)},
         {"transmittance", probability("probability a photon survives the channel", 1.0)},
         {"depolarization", probability("probability the polarization is randomized", 0.0)},
         {"detector_efficiency", probability("Bob's detector efficiency", 1.0)},
         {"sample_fraction",
          number("fraction of the sifted key disclosed for QBER estimation", 0.2, 0.0, 1.0, true, true)},
         {"threshold", number("QBER above which the channel is declared compromised", 0.11, 0.0,
                              0.25, true, false)},
         {"pulse_period", positive("preparation clock period, seconds", 1e-6)},
         {"transcript", boolean("write the per-photon JSONL transcript", true)}});

    Node entangle = object(
        "entangled pair source, analyzers, detectors and coincidence counter",
        {{"pairs", integer("emitted pairs", 100000, 1)},
         {"state", string_enum("two-photon state", "psi+", {"psi+", "psi-", "phi+", "phi-"})},
         {"angles", array("analyzer angles a, a', b, b' in degrees", Json{0.0, 45.0, 22.5, 67.5},
                          number("angle", nullptr), 4, 4)},
         {"pair_rate", positive("mean pair emission rate, Hz", 1e4)},
         {"efficiency", probability("detector efficiency, both arms", 0.35)},
         {"dark_rate", non_negative("dark count rate per detector, Hz", 0.0)},
         {"jitter_sigma", non_negative("timing jitter standard deviation, seconds", 0.0)},
         {"dead_time", non_negative("per-port dead time, seconds", 0.0)},
         {"window", positive("coincidence window, seconds", 25e-9)},
         {"clock_skew", number("Bob clock offset subtracted before matching, seconds", 0.0)},
         {"trigger_min_rate", positive("coincidence rate that asserts the trigger, Hz", 100.0)},
         {"trigger_window", positive("sliding window of the trigger, seconds", 0.01)},
         {"key_mode", boolean("also distill an entanglement-based key by basis sifting", false)}});

    Node formation = object(
        "leader plus followers under the PID formation law",
        {{"offsets",
          array("desired follower offsets from the leader, metres",
                Json{{1.0, 0.0, 0.0}, {-0.5, h, 0.0}, {-0.5, -h, 0.0}},
                vec3("offset", nullptr), 1)},
         {"adjacency",
          array("(n+1)x(n+1) 0/1 matrix, node 0 = leader; empty = each follower observes the "
                "leader and its ring neighbours",
                Json::array(), array("row", nullptr, integer("entry", nullptr, 0, 1)))},
         {"initial_positions",
          array("n+1 start positions, leader first; empty = leader at the origin and followers "
                "on the line y = -1",
                Json::array(), vec3("position", nullptr))},
         {"leader_velocity", vec3("constant leader velocity, m/s", Json{0.0, 0.0, 0.0})},
         {"kp", non_negative("proportional gain", 4.0)},
         {"ki", non_negative("integral gain", 0.0)},
         {"kd", non_negative("derivative gain", 4.0)},
         {"mass", positive("platform mass, kg", 1.0)},
         {"inertia", vec3("principal moments of inertia, kg m^2", Json{1.0, 1.0, 1.0})},
         {"integrator_limit", non_negative("per-axis clamp on the accumulated error", 10.0)},
         {"force_limit", non_negative("per-axis force saturation, N (0 = none)", 0.0)},
         {"offset_mode", string_enum("pairwise offset convention", "template", {"template", "paper"})},
         {"drag", non_negative("linear drag coefficient, N s/m", 0.0)},
         {"duration", positive("simulated time, seconds", 30.0)},
         {"dt", positive("integration step, seconds", 0.01)},
         {"tolerance", positive("error norm counted as converged, metres", 1e-3)},
         {"log_every", integer("write every k-th step to formation.csv", 10, 1)}});

    Node command = object("setpoint command",
                          {{"time", number("scheduled time, seconds", nullptr, 0.0)},
                           {"setpoint", number("new setpoint", nullptr)}});
    Node loop = object(
        "closed feedback loop with optional quantum gating of setpoint commands",
        {{"controller", transfer_function("controller c(s)", {4.0}, {1.0})},
         {"actuator", transfer_function("actuator Act(s)", {1.0}, {1.0})},
         {"plant", transfer_function("plant dynamics Dyn(s)", {1.0}, {0.0, 2.0, 1.0})},
         {"sensor", transfer_function("sensor H(s)", {1.0}, {1.0})},
         {"gate", string_enum("command gating", "none",
                              {"none", "key_protected", "entanglement_triggered"})},
         {"controller_gain_scale", number("multiplies the controller", 1.0)},
         {"commands", array("time-sorted setpoint schedule",
                            Json{{{"time", 0.0}, {"setpoint", 1.0}}}, command)},
         {"corrupt_commands",
          array("indices of commands whose ciphertext is corrupted in transit", Json::array(),
                integer("index", nullptr, 0))},
         {"triggers", array("active trigger intervals [start, end) for entanglement gating",
                            Json::array(), array("interval", nullptr, number("time", nullptr), 2, 2))},
         {"key_photons", integer("photons of the key session for key_protected gating", 4096, 1)},
         {"require_stable", boolean("reject a closed loop with right-half-plane poles", true)},
         {"duration", positive("simulated time, seconds", 10.0)},
         {"dt", positive("integration step, seconds", 1e-3)}});

    Node perturb = object(
        "Laplace-domain first-order perturbation benchmark",
        {{"energies", array("unperturbed energies, eV", Json{0.0, 1.0}, number("energy", nullptr), 2)},
         {"h_prime", array("real symmetric perturbation matrix, eV", Json{{0.0, 1.0}, {1.0, 0.0}},
                           array("row", nullptr, number("entry", nullptr)))},
         {"lambda", non_negative("coupling strength", 0.01)},
         {"initial_index", integer("initial eigenstate (0-based)", 0, 0)},
         {"lambdas", array("coupling strengths of the convergence sweep",
                           Json{0.04, 0.02, 0.01}, positive("lambda", 0.01), 2)},
         {"t_max", positive("end of the time grid in units of hbar / 1 eV", 10.0)},
         {"t_points", integer("points in the time grid", 201, 2)}});

    Node combined = object(
        "QKD-keyed, entanglement-triggered formation maneuver",
        {{"release_time", non_negative("earliest time offset commands may be released, seconds", 0.0)},
         {"abort_on_compromise", boolean("withhold all commands when QKD reports an eavesdropper", true)},
         {"trigger_required", boolean("hold commands when the entanglement trigger never fires", true)}});

    Node root = object("simulation scenario",
                       {{"kind", string_enum("scenario kind", nullptr,
                                             {"bb84", "entangle", "formation", "loop", "perturb",
                                              "combined"})},
                        {"seed", integer("64-bit master seed", 0, 0)},
                        {"description", string_enum("free text", "", {})},
                        {"bb84", bb84},
                        {"entangle", entangle},
                        {"formation", formation},
                        {"loop", loop},
                        {"perturb", perturb},
                        {"combined", combined}});
    return root;
  }();
  return root;
}

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaError, path + ": " + what);
}

bool is_integral(const Json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double d = v.get<double>();
  return std::isfinite(d) && std::floor(d) == d;
}

void check_range(const Node& node, double v, const std::string& path) {
  if (node.minimum) {
    if (node.exclusive_minimum ? !(v > *node.minimum) : !(v >= *node.minimum)) {
      schema_error(path, "must be " + std::string(node.exclusive_minimum ? "> " : ">= ") +
                             format_number(*node.minimum));
    }
  }
  if (node.maximum) {
    if (node.exclusive_maximum ? !(v < *node.maximum) : !(v <= *node.maximum)) {
      schema_error(path, "must be " + std::string(node.exclusive_maximum ? "< " : "<= ") +
                             format_number(*node.maximum));
    }
  }
}

Json resolve(const Node& node, const Json& value, const std::string& path) {
  switch (node.type) {
    case Type::Number: {
      if (!value.is_number()) schema_error(path, "expected a number");
      const double v = value.get<double>();
      if (!std::isfinite(v)) schema_error(path, "must be finite");
      check_range(node, v, path);
      return value;
    }
    case Type::Integer: {
      if (!is_integral(value)) schema_error(path, "expected an integer");
      if (value.is_number_float()) {
        const double v = value.get<double>();
        check_range(node, v, path);
        if (v < 0) return Json(static_cast<std::int64_t>(v));
        return Json(static_cast<std::uint64_t>(v));
      }
      if (value.is_number_unsigned()) {
        check_range(node, static_cast<double>(value.get<std::uint64_t>()), path);
      } else {
        check_range(node, static_cast<double>(value.get<std::int64_t>()), path);
      }
      return value;
    }
    case Type::Boolean:
      if (!value.is_boolean()) schema_error(path, "expected true or false");
      return value;
    case Type::String: {
      if (!value.is_string()) schema_error(path, "expected a string");
      const auto s = value.get<std::string>();
      if (!node.enumeration.empty() &&
          std::find(node.enumeration.begin(), node.enumeration.end(), s) ==
              node.enumeration.end()) {
        std::string allowed;
        for (const auto& e : node.enumeration) allowed += (allowed.empty() ? "" : ", ") + e;
        schema_error(path, "'" + s + "' is not one of " + allowed);
      }
      return value;
    }
    case Type::Array: {
      if (!value.is_array()) schema_error(path, "expected an array");
      if (node.min_items && value.size() < *node.min_items) {
        schema_error(path, "needs at least " + std::to_string(*node.min_items) + " items");
      }
      if (node.max_items && value.size() > *node.max_items) {
        schema_error(path, "allows at most " + std::to_string(*node.max_items) + " items");
      }
      Json out = Json::array();
      for (std::size_t i = 0; i < value.size(); ++i) {
        out.push_back(resolve(*node.items, value[i], path + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
    case Type::Object: {
      if (!value.is_object()) schema_error(path, "expected an object");
      for (const auto& [key, _] : value.items()) {
        const bool known = std::any_of(node.properties.begin(), node.properties.end(),
                                       [&](const auto& p) { return p.first == key; });
        if (!known) schema_error(path + "." + key, "unknown key '" + key + "'");
      }
      Json out = Json::object();
      for (const auto& [key, child] : node.properties) {
        const std::string child_path = path + "." + key;
        if (value.contains(key)) {
          out[key] = resolve(child, value.at(key), child_path);
        } else if (child.default_value.is_null()) {
          schema_error(child_path, "required key missing");
        } else {
          out[key] = resolve(child, child.default_value, child_path);
        }
      }
      return out;
    }
  }
  return value;
}

Json to_json_schema(const Node& node) {
  Json s = Json::object();
  if (!node.description.empty()) s["description"] = node.description;
  switch (node.type) {
    case Type::Number: s["type"] = "number"; break;
    case Type::Integer: s["type"] = "integer"; break;
    case Type::Boolean: s["type"] = "boolean"; break;
    case Type::String:
      s["type"] = "string";
      if (!node.enumeration.empty()) s["enum"] = node.enumeration;
      break;
    case Type::Array:
      s["type"] = "array";
      s["items"] = to_json_schema(*node.items);
      if (node.min_items) s["minItems"] = *node.min_items;
      if (node.max_items) s["maxItems"] = *node.max_items;
      break;
    case Type::Object: {
      s["type"] = "object";
      s["additionalProperties"] = false;
      Json props = Json::object();
      Json required = Json::array();
      for (const auto& [key, child] : node.properties) {
        props[key] = to_json_schema(child);
        if (child.default_value.is_null()) required.push_back(key);
      }
      s["properties"] = props;
      if (!required.empty()) s["required"] = required;
      break;
    }
  }
  if (node.minimum) s[node.exclusive_minimum ? "exclusiveMinimum" : "minimum"] = *node.minimum;
  if (node.maximum) s[node.exclusive_maximum ? "exclusiveMaximum" : "maximum"] = *node.maximum;
  if (!node.default_value.is_null() && node.type != Type::Object) {
    s["default"] = node.default_value;
  }
  return s;
}

// sections each kind reads; other sections are validated but not defaulted
std::vector<std::string> sections_for(Kind kind) {
  switch (kind) {
    case Kind::Bb84: return {"bb84"};
    case Kind::Entangle: return {"entangle"};
    case Kind::Formation: return {"formation"};
    case Kind::Loop: return {"loop"};
    case Kind::Perturb: return {"perturb"};
    case Kind::Combined: return {"bb84", "entangle", "formation", "combined"};
  }
  return {};
}

}  // namespace

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::Bb84: return "bb84";
    case Kind::Entangle: return "entangle";
    case Kind::Formation: return "formation";
    case Kind::Loop: return "loop";
    case Kind::Perturb: return "perturb";
    case Kind::Combined: return "combined";
  }
  return "?";
}

Kind parse_kind(std::string_view name) {
  for (auto k : {Kind::Bb84, Kind::Entangle, Kind::Formation, Kind::Loop, Kind::Perturb,
                 Kind::Combined}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::SchemaError, "$.kind: unknown scenario kind '" + std::string(name) + "'");
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string ScenarioConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(resolved.dump())));
  return buf;
}

ScenarioConfig parse_scenario(const Json& document) {
  if (!document.is_object()) schema_error("$", "scenario must be a JSON object");
  Json resolved = resolve(root_schema(), document, "$");

  ScenarioConfig cfg;
  cfg.kind = parse_kind(resolved.at("kind").get<std::string>());
  cfg.seed = resolved.at("seed").get<std::uint64_t>();

  const auto used = sections_for(cfg.kind);
  for (const auto& [key, _] : root_schema().properties) {
    const bool section = resolved.at(key).is_object();
    const bool wanted = std::find(used.begin(), used.end(), key) != used.end();
    if (section && !wanted && !document.contains(key)) resolved.erase(key);
  }
  cfg.resolved = std::move(resolved);
  return cfg;
}

ScenarioConfig parse_scenario_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return parse_scenario(doc);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

Json json_schema() {
  Json s = to_json_schema(root_schema());
  Json out = Json::object();
  out["$schema"] = "https://json-schema.org/draft/2020-12/schema";
  out["title"] = "qauto scenario";
  for (auto& [k, v] : s.items()) out[k] = v;
  return out;
}

}  // namespace qauto::scenario
