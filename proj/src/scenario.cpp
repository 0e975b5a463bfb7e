#include "qauto/scenario.hpp"

#include "qauto/bb84.hpp"
#include "qauto/control_loop.hpp"
#include "qauto/formation.hpp"
#include "qauto/perturbation.hpp"
#include "qauto/qubit.hpp"
#include "qauto/rng.hpp"
#include "qauto/spdc.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

namespace qauto::scenario {

namespace {

using rigid_body::Vec3;

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "true" : "false"; }

Vec3 vec3(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string scalar_text(const Json& v) {
  if (v.is_boolean()) return flag(v.get<bool>());
  if (v.is_number_float()) return num(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// ---------------------------------------------------------------- bb84

bb84::SessionConfig bb84_session_config(const Json& s) {
  bb84::SessionConfig c;
  c.n = s.at("n").get<std::size_t>();
  c.channel.transmittance = s.at("transmittance").get<double>();
  c.channel.depolarization_prob = s.at("depolarization").get<double>();
  c.channel.detector_efficiency = s.at("detector_efficiency").get<double>();
  const double eve = s.at("eve_fraction").get<double>();
  if (eve > 0.0) c.channel.eve = bb84::InterceptResend{eve};
  c.sample_fraction = s.at("sample_fraction").get<double>();
  c.threshold = s.at("threshold").get<double>();
  c.pulse_period = s.at("pulse_period").get<double>();
  return c;
}

void record_bb84(RunLog& log, const bb84::Session& s, bool transcript) {
  const std::size_t key_len = s.estimate.alice.bits.size();
  Table& t = log.tables["bb84_summary"];
  t.columns = {"n", "sift_fraction", "qber", "verdict", "key_len"};
  t.add({num(s.prepared.size()), num(s.sift_fraction()), num(s.estimate.qber),
         std::string(bb84::to_string(s.verdict)), num(key_len)});

  log.summary["n"] = s.prepared.size();
  log.summary["sift_fraction"] = s.sift_fraction();
  log.summary["sifted_len"] = s.sifted.alice.bits.size();
  log.summary["qber"] = s.estimate.qber;
  log.summary["qber_sample"] = s.estimate.sample_size;
  log.summary["verdict"] = std::string(bb84::to_string(s.verdict));
  log.summary["key_len"] = key_len;
  log.summary["keys_identical"] = s.estimate.alice.bits == s.estimate.bob.bits;

  if (!transcript) return;
  // 0 = discarded, 1 = sifted into the key, 2 = disclosed for QBER
  std::vector<std::uint8_t> fate(s.prepared.size(), 0);
  for (std::size_t i : s.sifted.alice.source_indices) fate[i] = 1;
  for (std::size_t i : s.estimate.alice.qber_sample_indices) fate[i] = 2;
  auto& stream = log.streams["bb84_transcript"];
  stream.reserve(s.prepared.size());
  for (std::size_t i = 0; i < s.prepared.size(); ++i) {
    const auto& p = s.prepared[i];
    const auto& a = s.arrivals[i];
    const auto& m = s.outcomes[i];
    Json r;
    r["index"] = p.index;
    r["t"] = p.timestamp;
    r["alice"] = {{"bit", p.bit}, {"basis", bb84::to_string(p.basis)}, {"angle", p.pol_angle}};
    Json channel = {{"lost", a.lost}, {"depolarized", a.depolarized}, {"angle", a.angle}};
    if (a.intercepted) {
      channel["eve"] = {{"basis", bb84::to_string(a.eve_basis)}, {"bit", a.eve_bit}};
    }
    r["channel"] = channel;
    Json bob = {{"basis", bb84::to_string(m.basis)}, {"detected", m.detected}};
    if (m.detected) bob["bit"] = m.bit;
    r["bob"] = bob;
    r["sifted"] = fate[i] != 0;
    r["disclosed"] = fate[i] == 2;
    stream.push_back(std::move(r));
  }
}

void run_bb84(const ScenarioConfig& cfg, RunLog& log) {
  const Json& s = cfg.section("bb84");
  const auto session = bb84::run_session(bb84_session_config(s), cfg.seed);
  spdlog::info("bb84: sifted {} of {}, qber {:.4f}, {}", session.sifted.alice.bits.size(),
               session.prepared.size(), session.estimate.qber, bb84::to_string(session.verdict));
  record_bb84(log, session, s.at("transcript").get<bool>());
}

// ---------------------------------------------------------------- entangle

spdc::BellTestConfig bell_config(const Json& s) {
  spdc::BellTestConfig c;
  c.state = spdc::TwoPhotonState::bell(spdc::parse_bell_state(s.at("state").get<std::string>()));
  const auto& a = s.at("angles");
  c.alpha = {a.at(0).get<double>(), a.at(1).get<double>()};
  c.beta = {a.at(2).get<double>(), a.at(3).get<double>()};
  c.pairs = s.at("pairs").get<std::size_t>();
  c.pair_rate = s.at("pair_rate").get<double>();
  spdc::DetectorModel det;
  det.efficiency = s.at("efficiency").get<double>();
  det.dark_rate = s.at("dark_rate").get<double>();
  det.jitter_sigma = s.at("jitter_sigma").get<double>();
  det.dead_time = s.at("dead_time").get<double>();
  c.det_a = det;
  c.det_b = det;
  c.coincidence.window = s.at("window").get<double>();
  c.coincidence.clock_skew = s.at("clock_skew").get<double>();
  return c;
}

struct EntangleOutcome {
  spdc::BellTestResult bell;
  std::vector<spdc::TriggerEdge> edges;
};

EntangleOutcome run_entangle_core(const Json& s, std::uint64_t seed, RunLog& log) {
  const auto cfg = bell_config(s);
  EntangleOutcome out;
  out.bell = spdc::run_bell_test(cfg, seed);
  out.edges = spdc::entanglement_trigger(out.bell.coincidence_times,
                                         s.at("trigger_min_rate").get<double>(),
                                         s.at("trigger_window").get<double>());
  const auto& b = out.bell;
  spdlog::info("entangle: {} coincidences, S = {:.4f} +/- {:.4f}, {} trigger edges",
               b.coincidence_times.size(), b.s, b.s_sigma, out.edges.size());

  Table& counts = log.tables["entangle_counts"];
  counts.columns = {"alice_setting", "bob_setting", "alpha_deg", "beta_deg", "n_tt", "n_tr",
                    "n_rt",          "n_rr",        "total",     "E",        "E_sigma"};
  for (int a = 0; a < 2; ++a) {
    for (int c = 0; c < 2; ++c) {
      const auto& n = b.counts[a][c];
      counts.add({num(std::size_t(a)), num(std::size_t(c)), num(cfg.alpha[a]), num(cfg.beta[c]),
                  num(n.tt), num(n.tr), num(n.rt), num(n.rr), num(n.total()), num(b.e[a][c]),
                  num(b.e_sigma[a][c])});
    }
  }
  Table& summary = log.tables["entangle_summary"];
  summary.columns = {"state", "pairs", "singles_a", "singles_b", "coincidences", "E_ab", "E_abp",
                     "E_apb", "E_apbp", "S", "S_sigma", "trigger_count"};
  const auto rising = static_cast<std::size_t>(
      std::count_if(out.edges.begin(), out.edges.end(), [](const auto& e) { return e.rising; }));
  summary.add({s.at("state").get<std::string>(), num(cfg.pairs), num(b.singles_a),
               num(b.singles_b), num(b.coincidence_times.size()), num(b.e[0][0]), num(b.e[0][1]),
               num(b.e[1][0]), num(b.e[1][1]), num(b.s), num(b.s_sigma), num(rising)});
  Table& trig = log.tables["entangle_trigger"];
  trig.columns = {"t", "edge"};
  for (const auto& e : out.edges) trig.add({num(e.time), e.rising ? "rise" : "fall"});

  log.summary["chsh_s"] = b.s;
  log.summary["chsh_sigma"] = b.s_sigma;
  log.summary["coincidences"] = b.coincidence_times.size();
  log.summary["trigger_count"] = rising;
  return out;
}

void run_entangle(const ScenarioConfig& cfg, RunLog& log) {
  const Json& s = cfg.section("entangle");
  run_entangle_core(s, cfg.seed, log);
  if (!s.at("key_mode").get<bool>()) return;

  const auto bc = bell_config(s);
  const auto rec = spdc::entanglement_key_records(bc.state, bc.pairs, bc.pair_rate, bc.det_a,
                                                  bc.det_b, bc.coincidence, cfg.seed);
  const auto sifted = bb84::sift(rec.alice, rec.bob);
  Table& t = log.tables["entangle_key"];
  t.columns = {"coincidences", "sifted_len", "qber", "key_len"};
  if (sifted.alice.bits.empty()) {
    t.add({num(rec.alice.size()), "0", "nan", "0"});
    log.summary["ekey_len"] = 0;
    return;
  }
  RngStream rng = derive_stream(cfg.seed, "spdc.key.qber");
  const auto est = bb84::estimate_qber(sifted.alice, sifted.bob, bb84::kDefaultSampleFraction, rng);
  t.add({num(rec.alice.size()), num(sifted.alice.bits.size()), num(est.qber),
         num(est.alice.bits.size())});
  log.summary["ekey_qber"] = est.qber;
  log.summary["ekey_len"] = est.alice.bits.size();
}

// ---------------------------------------------------------------- formation

struct FormationSetup {
  formation::AgentNetwork network;
  std::vector<formation::FormationAgent> agents;
  formation::FormationSimConfig sim;
  std::size_t log_every = 1;
};

FormationSetup formation_setup(const Json& s) {
  FormationSetup f;
  for (const auto& o : s.at("offsets")) f.network.offsets.push_back(vec3(o));
  const std::size_t n = f.network.offsets.size();

  const auto& adj = s.at("adjacency");
  f.network.adjacency = Eigen::MatrixXi::Zero(static_cast<int>(n + 1), static_cast<int>(n + 1));
  if (adj.empty()) {
    for (std::size_t i = 1; i <= n; ++i) {
      f.network.adjacency(static_cast<int>(i), 0) = 1;
      if (n > 1) {
        const std::size_t next = i % n + 1;
        const std::size_t prev = (i + n - 2) % n + 1;
        f.network.adjacency(static_cast<int>(i), static_cast<int>(next)) = 1;
        f.network.adjacency(static_cast<int>(i), static_cast<int>(prev)) = 1;
      }
    }
  } else {
    if (adj.size() != n + 1) {
      throw Error(ErrorCode::SchemaError, "$.formation.adjacency: expected " +
                                              std::to_string(n + 1) + " rows");
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (adj[i].size() != n + 1) {
        throw Error(ErrorCode::SchemaError, "$.formation.adjacency[" + std::to_string(i) +
                                                "]: expected " + std::to_string(n + 1) +
                                                " entries");
      }
      for (std::size_t j = 0; j <= n; ++j) {
        f.network.adjacency(static_cast<int>(i), static_cast<int>(j)) = adj[i][j].get<int>();
      }
    }
  }
  f.network.gains = formation::PidGains::uniform(s.at("kp").get<double>(), s.at("ki").get<double>(),
                                                 s.at("kd").get<double>());
  f.network.integrator_limit = s.at("integrator_limit").get<double>();
  const double force_limit = s.at("force_limit").get<double>();
  if (force_limit > 0.0) f.network.force_limit = Vec3::Constant(force_limit);
  f.network.offset_mode = s.at("offset_mode").get<std::string>() == "paper"
                              ? formation::OffsetMode::Paper
                              : formation::OffsetMode::Template;
  f.network.validate();

  rigid_body::PlatformParams params;
  params.mass = rigid_body::MassSchedule(s.at("mass").get<double>());
  const Vec3 inertia = vec3(s.at("inertia"));
  params.inertia = {inertia.x(), inertia.y(), inertia.z()};
  params.inertia.validate();

  const auto& init = s.at("initial_positions");
  if (!init.empty() && init.size() != n + 1) {
    throw Error(ErrorCode::SchemaError, "$.formation.initial_positions: expected " +
                                            std::to_string(n + 1) + " positions");
  }
  for (std::size_t i = 0; i <= n; ++i) {
    formation::FormationAgent a;
    a.params = params;
    if (!init.empty()) {
      a.state.position = vec3(init[i]);
    } else if (i > 0) {
      a.state.position = Vec3(-1.5 + 0.5 * static_cast<double>(i), -1.0, 0.0);
    }
    f.agents.push_back(a);
  }
  f.agents[0].state.velocity = vec3(s.at("leader_velocity"));

  f.sim.duration = s.at("duration").get<double>();
  f.sim.dt = s.at("dt").get<double>();
  f.sim.tolerance = s.at("tolerance").get<double>();
  f.sim.drag_coefficient = s.at("drag").get<double>();
  f.log_every = s.at("log_every").get<std::size_t>();
  return f;
}

void record_formation(RunLog& log, const FormationSetup& f, const formation::FormationResult& r) {
  Table& t = log.tables["formation"];
  t.columns = {"t"};
  for (std::size_t i = 0; i < f.agents.size(); ++i) {
    const std::string id = i == 0 ? "leader" : "f" + std::to_string(i);
    t.columns.insert(t.columns.end(), {id + "_x", id + "_y", id + "_z"});
  }
  t.columns.push_back("error_norm");
  for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
    if (k % f.log_every != 0 && k + 1 != r.trajectory.size()) continue;
    const auto& s = r.trajectory[k];
    std::vector<std::string> row{num(s.t)};
    for (const auto& p : s.positions) {
      row.insert(row.end(), {num(p.x()), num(p.y()), num(p.z())});
    }
    row.push_back(num(s.error_norm));
    t.add(std::move(row));
  }
  Table& summary = log.tables["formation_summary"];
  summary.columns = {"followers", "initial_error", "final_error", "converged"};
  summary.add({num(f.network.followers()), num(r.initial_error), num(r.final_error),
               flag(r.converged)});
  log.summary["followers"] = f.network.followers();
  log.summary["initial_error"] = r.initial_error;
  log.summary["final_error"] = r.final_error;
  log.summary["converged"] = r.converged;
}

void run_formation(const ScenarioConfig& cfg, RunLog& log) {
  const FormationSetup f = formation_setup(cfg.section("formation"));
  const auto r = formation::simulate_formation(f.network, f.agents, f.sim);
  spdlog::info("formation: error {:.3e} -> {:.3e}", r.initial_error, r.final_error);
  record_formation(log, f, r);
}

// ---------------------------------------------------------------- loop

control::RationalTF tf_from(const Json& j) {
  return control::RationalTF(control::Polynomial(j.at("num").get<std::vector<double>>()),
                             control::Polynomial(j.at("den").get<std::vector<double>>()));
}

void run_loop(const ScenarioConfig& cfg, RunLog& log) {
  const Json& s = cfg.section("loop");
  control::LoopConfig loop;
  loop.controller = tf_from(s.at("controller"));
  loop.actuator = tf_from(s.at("actuator"));
  loop.plant = tf_from(s.at("plant"));
  loop.sensor = tf_from(s.at("sensor"));
  loop.controller_gain_scale = s.at("controller_gain_scale").get<double>();
  const std::string gate = s.at("gate").get<std::string>();
  loop.gate = gate == "key_protected"            ? control::QuantumGate::KeyProtected
              : gate == "entanglement_triggered" ? control::QuantumGate::EntanglementTriggered
                                                 : control::QuantumGate::None;

  const control::RationalTF closed = loop.closed();
  const bool stable = control::is_stable(closed);
  if (s.at("require_stable").get<bool>() && !stable) {
    throw Error(ErrorCode::InvalidArgument, "$.loop: closed loop has right-half-plane poles");
  }

  std::vector<control::Command> commands;
  for (const auto& c : s.at("commands")) {
    commands.push_back({c.at("time").get<double>(), c.at("setpoint").get<double>(), {}, 0});
  }
  control::GateInputs inputs;
  bb84::OneTimePad receiver;
  if (loop.gate == control::QuantumGate::KeyProtected) {
    bb84::SessionConfig sc;
    sc.n = s.at("key_photons").get<std::size_t>();
    const auto session = bb84::run_session(sc, cfg.seed);
    bb84::OneTimePad sender(session.estimate.alice.bits);
    receiver = bb84::OneTimePad(session.estimate.bob.bits);
    for (std::size_t i = 0; i < commands.size(); ++i) {
      commands[i].sequence = static_cast<std::uint16_t>(i + 1);
      commands[i].frame = control::seal_setpoint(commands[i].sequence, commands[i].setpoint, sender);
    }
    for (const auto& idx : s.at("corrupt_commands")) {
      const auto i = idx.get<std::size_t>();
      if (i >= commands.size()) {
        throw Error(ErrorCode::SchemaError, "$.loop.corrupt_commands: index " + std::to_string(i) +
                                                " out of range");
      }
      commands[i].frame[6] ^= 0x01;
    }
    inputs.receiver_pad = &receiver;
    log.summary["key_bits"] = session.estimate.alice.bits.size();
  }
  for (const auto& w : s.at("triggers")) {
    inputs.triggers.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
  }

  const auto result = control::quantum_gated_run(loop, commands, inputs, s.at("duration").get<double>(),
                                                 s.at("dt").get<double>());

  Table& t = log.tables["loop"];
  t.columns = {"t", "setpoint", "released", "output"};
  for (const auto& x : result.samples) {
    t.add({num(x.t), num(x.setpoint), x.released ? "1" : "0", num(x.output)});
  }
  Table& coef = log.tables["loop_coefficients"];
  coef.columns = {"polynomial", "power", "coefficient"};
  const auto list = [&](const char* name, const control::Polynomial& p) {
    for (std::size_t k = 0; k < p.coefficients().size(); ++k) {
      coef.add({name, num(k), num(p.coefficients()[k])});
    }
  };
  list("numerator", result.closed_loop.numerator());
  list("denominator", result.closed_loop.denominator());

  std::size_t counts[3] = {0, 0, 0};
  auto& decisions = log.streams["loop_decisions"];
  for (const auto& d : result.decisions) {
    ++counts[static_cast<int>(d.action)];
    decisions.push_back({{"t", d.time},
                         {"command", d.command},
                         {"action", control::to_string(d.action)},
                         {"reason", d.reason}});
  }
  log.summary["gate"] = gate;
  log.summary["stable"] = stable;
  log.summary["released"] = counts[0];
  log.summary["held"] = counts[1];
  log.summary["deferred"] = counts[2];
  log.summary["final_setpoint"] = result.samples.back().setpoint;
  log.summary["final_output"] = result.samples.back().output;
  if (const auto g = control::dc_gain(result.closed_loop)) log.summary["dc_gain"] = *g;
  spdlog::info("loop: {} released, {} held, {} deferred, final output {:.6f}", counts[0],
               counts[1], counts[2], result.samples.back().output);
}

// ---------------------------------------------------------------- perturb

void run_perturb(const ScenarioConfig& cfg, RunLog& log) {
  const Json& s = cfg.section("perturb");
  const auto energies = s.at("energies").get<std::vector<double>>();
  const auto n = static_cast<Eigen::Index>(energies.size());
  const auto& rows = s.at("h_prime");
  if (static_cast<Eigen::Index>(rows.size()) != n) {
    throw Error(ErrorCode::SchemaError, "$.perturb.h_prime: expected " + std::to_string(n) + " rows");
  }
  perturbation::MatXc hp(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != n) {
      throw Error(ErrorCode::SchemaError, "$.perturb.h_prime[" + std::to_string(i) +
                                              "]: expected " + std::to_string(n) + " entries");
    }
    for (Eigen::Index j = 0; j < n; ++j) hp(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }

  perturbation::PerturbationProblem problem;
  problem.eigen = perturbation::EigenSystem::from_energies(energies);
  problem.h_prime = hp;
  problem.lambda = s.at("lambda").get<double>();
  problem.initial_index = s.at("initial_index").get<Eigen::Index>();
  problem.validate();
  perturbation::first_order_time_state(problem, 0.0);  // surfaces DegenerateSpectrum

  const double t_max = s.at("t_max").get<double>() * qubit::kHbarEvS;
  const auto points = s.at("t_points").get<std::size_t>();
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = t_max * static_cast<double>(k) / static_cast<double>(points - 1);
  }
  const auto lambdas = s.at("lambdas").get<std::vector<double>>();
  const auto report = perturbation::validate_against_ode(problem, grid, lambdas);
  if (report.error) throw Error(ErrorCode::DegenerateSpectrum, *report.error);

  Table& t = log.tables["perturb"];
  t.columns = {"lambda", "max_error", "max_norm_defect"};
  for (const auto& r : report.sweep) {
    t.add({num(r.lambda), num(r.max_error), num(r.max_norm_defect)});
  }
  Table& summary = log.tables["perturb_summary"];
  summary.columns = {"lambda", "max_error", "error_exponent", "norm_defect_exponent"};
  summary.add({num(problem.lambda), num(report.max_error), num(report.error_exponent),
               num(report.norm_defect_exponent)});
  log.summary["lambda"] = problem.lambda;
  log.summary["max_error"] = report.max_error;
  log.summary["error_exponent"] = report.error_exponent;
  log.summary["norm_defect_exponent"] = report.norm_defect_exponent;
  spdlog::info("perturb: error exponent {:.3f}", report.error_exponent);
}

// ---------------------------------------------------------------- combined

void run_combined(const ScenarioConfig& cfg, RunLog& log) {
  const Json& c = cfg.section("combined");

  const Json& qs = cfg.section("bb84");
  const auto session = bb84::run_session(bb84_session_config(qs), cfg.seed);
  record_bb84(log, session, qs.at("transcript").get<bool>());

  const auto ent = run_entangle_core(cfg.section("entangle"), cfg.seed, log);
  std::optional<double> trigger_time;
  for (const auto& e : ent.edges) {
    if (e.rising) {
      trigger_time = e.time;
      break;
    }
  }

  FormationSetup f = formation_setup(cfg.section("formation"));
  const std::size_t n = f.network.followers();
  const bool compromised = session.verdict == bb84::Verdict::Compromised;
  const bool abort = compromised && c.at("abort_on_compromise").get<bool>();
  const bool no_trigger = !trigger_time && c.at("trigger_required").get<bool>();
  const double release = std::max(c.at("release_time").get<double>(), trigger_time.value_or(0.0));

  bb84::OneTimePad alice_pad(session.estimate.alice.bits);
  bb84::OneTimePad bob_pad(session.estimate.bob.bits);
  auto& stream = log.streams["combined_commands"];
  f.sim.activation_times.assign(n, std::numeric_limits<double>::infinity());
  std::size_t released = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto seq = static_cast<std::uint16_t>(i + 1);
    Json rec = {{"follower", i + 1}, {"sequence", seq}};
    std::string reason;
    if (abort) {
      reason = "channel compromised";
    } else if (no_trigger) {
      reason = "no entanglement trigger";
    } else {
      const Vec3& d = f.network.offsets[i];
      const double payload[] = {d.x(), d.y(), d.z()};
      const auto cipher = bb84::seal_command(seq, bb84::encode_doubles(payload), alice_pad);
      const auto plain = bb84::open_command(cipher, bob_pad, seq);
      const auto values = plain ? bb84::decode_doubles(*plain) : std::nullopt;
      if (values && values->size() == 3) {
        f.network.offsets[i] = Vec3((*values)[0], (*values)[1], (*values)[2]);
        f.sim.activation_times[i] = release;
        ++released;
      } else {
        reason = "frame failed to authenticate";
      }
    }
    rec["action"] = reason.empty() ? "released" : "held";
    if (!reason.empty()) rec["reason"] = reason;
    rec["t"] = reason.empty() ? Json(release) : Json(nullptr);
    stream.push_back(std::move(rec));
  }

  const auto r = formation::simulate_formation(f.network, f.agents, f.sim);
  record_formation(log, f, r);

  Table& t = log.tables["combined_summary"];
  t.columns = {"verdict", "qber", "key_len", "chsh_s", "trigger_time", "released", "held",
               "initial_error", "final_error", "converged"};
  t.add({std::string(bb84::to_string(session.verdict)), num(session.estimate.qber),
         num(session.estimate.alice.bits.size()), num(ent.bell.s),
         trigger_time ? num(*trigger_time) : "", num(released), num(n - released),
         num(r.initial_error), num(r.final_error), flag(r.converged)});
  log.summary["released"] = released;
  log.summary["held"] = n - released;
  log.summary["trigger_time"] = trigger_time ? Json(*trigger_time) : Json(nullptr);
  log.summary["key_bits_used"] = alice_pad.cursor();
  spdlog::info("combined: {} ({}), {} of {} commands released, error {:.3e} -> {:.3e}",
               bb84::to_string(session.verdict), session.estimate.qber, released, n,
               r.initial_error, r.final_error);
}

}  // namespace

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorCode::SizeMismatch, "row has " + std::to_string(row.size()) +
                                             " cells, header has " +
                                             std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

int RunLog::exit_status() const {
  if (!error) return 0;
  return error->value("exit_code", 3);
}

RunLog run(const ScenarioConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  RunLog log;
  log.header = {{"type", "header"},
                {"version", kVersion},
                {"kind", to_string(config.kind)},
                {"seed", config.seed},
                {"config_hash", config.hash()},
                {"config", config.resolved}};
  spdlog::debug("running {} scenario, seed {}, config {}", to_string(config.kind), config.seed,
                config.hash());
  try {
    switch (config.kind) {
      case Kind::Bb84: run_bb84(config, log); break;
      case Kind::Entangle: run_entangle(config, log); break;
      case Kind::Formation: run_formation(config, log); break;
      case Kind::Loop: run_loop(config, log); break;
      case Kind::Perturb: run_perturb(config, log); break;
      case Kind::Combined: run_combined(config, log); break;
    }
  } catch (const Error& e) {
    log.error = Json{{"type", "error"},
                     {"code", to_string(e.code())},
                     {"exit_code", exit_code(e.error_class())},
                     {"message", e.what()}};
    spdlog::error("{}", e.what());
  }
  log.wallclock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return log;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

void write_table(const Table& t, const std::filesystem::path& p) {
  auto out = open_out(p);
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(cells[i]);
    }
    out << '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
  finish(out, p);
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void emit_plots(const RunLog& log, const std::filesystem::path& out_dir) {
  make_dir(out_dir);
  for (const auto& [name, table] : log.tables) write_table(table, out_dir / (name + ".csv"));
  for (const auto& [name, records] : log.streams) {
    const auto p = out_dir / (name + ".jsonl");
    auto out = open_out(p);
    for (const auto& r : records) out << r.dump() << '\n';
    finish(out, p);
  }
  {
    const auto p = out_dir / "run.jsonl";
    auto out = open_out(p);
    out << log.header.dump() << '\n';
    Json summary = {{"type", "summary"}, {"metrics", log.summary}};
    out << summary.dump() << '\n';
    if (log.error) out << log.error->dump() << '\n';
    finish(out, p);
  }
  if (log.wallclock_seconds) {
    const auto p = out_dir / "wallclock.txt";
    auto out = open_out(p);
    out << "elapsed_seconds " << format_number(*log.wallclock_seconds) << '\n';
    finish(out, p);
  }
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t index) {
  return derive_stream_key(seed, "trial", index);
}

std::vector<RunLog> run_trials(const ScenarioConfig& config, std::size_t trials,
                               std::size_t threads) {
  std::vector<RunLog> logs(trials);
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, trials);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < trials; k = next++) {
      ScenarioConfig c = config;
      c.seed = trial_seed(config.seed, k);
      c.resolved["seed"] = c.seed;
      logs[k] = run(c);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return logs;
}

void emit_trials(const std::vector<RunLog>& logs, const std::filesystem::path& out_dir) {
  make_dir(out_dir);
  Table merged;
  merged.columns = {"trial", "seed"};
  Json keys = Json::object();
  for (const auto& l : logs) {
    for (const auto& [k, _] : l.summary.items()) keys[k] = true;
  }
  for (const auto& [k, _] : keys.items()) merged.columns.push_back(k);
  merged.columns.push_back("error");
  for (std::size_t k = 0; k < logs.size(); ++k) {
    char dir[32];
    std::snprintf(dir, sizeof dir, "trial_%04zu", k);
    emit_plots(logs[k], out_dir / dir);
    std::vector<std::string> row{num(k), logs[k].header.at("seed").dump()};
    for (const auto& [key, _] : keys.items()) {
      row.push_back(logs[k].summary.contains(key) ? scalar_text(logs[k].summary.at(key)) : "");
    }
    row.push_back(logs[k].error ? logs[k].error->at("code").get<std::string>() : "");
    merged.add(std::move(row));
  }
  write_table(merged, out_dir / "trials.csv");
}

}  // namespace qauto::scenario
