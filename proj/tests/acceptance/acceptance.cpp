// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "qauto/bb84.hpp"
#include "qauto/control_loop.hpp"
#include "qauto/error.hpp"
#include "qauto/formation.hpp"
#include "qauto/perturbation.hpp"
#include "qauto/qubit.hpp"
#include "qauto/rigid_body.hpp"
#include "qauto/scenario.hpp"
#include "qauto/spdc.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace qauto;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

// 1 -------------------------------------------------------------------------
Outcome check_quantum_statistics() {
  Outcome o;
  const double p = qubit::probability(qubit::Qubit::plus_x(), qubit::Qubit::plus_z());
  o.require(std::abs(p - 0.5) < 1e-15, "P(+z|+x) = " + fmt(p, 17));
  RngStream rng = derive_stream(1, "acceptance.qubit");
  const std::size_t n = 100000;
  std::size_t plus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    plus += qubit::measure(qubit::Qubit::plus_x(), qubit::MeasurementBasis::z(), rng).outcome ==
            qubit::Outcome::Plus;
  }
  const double f = static_cast<double>(plus) / n;
  o.require(std::abs(f - 0.5) <= 0.005, "sampled " + fmt(f) + " over 1e5");
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome check_bb84_ideal() {
  Outcome o;
  bb84::SessionConfig c;
  c.n = 100000;
  const auto s = bb84::run_session(c, 2);
  o.require(std::abs(s.sift_fraction() - 0.5) <= 0.005, "sift " + fmt(s.sift_fraction()));
  o.require(s.estimate.qber < 0.001, "QBER " + fmt(s.estimate.qber));
  o.require(s.sifted.alice.bits == s.sifted.bob.bits && s.estimate.alice.bits == s.estimate.bob.bits,
            "keys identical");
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome check_bb84_eve() {
  Outcome o;
  const double oracle = oracle::intercept_resend_qber(1.0);
  o.require(std::abs(oracle - 0.25) < 1e-12, "enumeration " + fmt(oracle));
  bb84::SessionConfig c;
  c.n = 100000;
  c.channel.eve = bb84::InterceptResend{1.0};
  const auto s = bb84::run_session(c, 3);
  o.require(std::abs(s.estimate.qber - oracle) <= 0.01, "QBER " + fmt(s.estimate.qber));
  o.require(bb84::detect_eve(s.estimate.qber) == bb84::Verdict::Compromised, "compromised");
  return o;
}

// 4 -------------------------------------------------------------------------
Outcome check_chsh() {
  Outcome o;
  const auto phi = spdc::TwoPhotonState::bell(spdc::BellState::PhiPlus);
  const auto e = [&](double a, double b) { return spdc::joint_probabilities(phi, a, b).correlation(); };
  const double s = spdc::chsh(e(0, 22.5), e(0, 67.5), e(45, 22.5), e(45, 67.5));
  o.require(std::abs(s - 2 * std::sqrt(2.0)) < 1e-12, "analytic S " + fmt(s, 15));
  spdc::BellTestConfig cfg;
  cfg.state = phi;
  cfg.pairs = 100000;
  const auto r = spdc::run_bell_test(cfg, 4);
  o.require(std::abs(r.s - 2.828) <= 0.03, "sampled S " + fmt(r.s) + " +- " + fmt(r.s_sigma, 3));
  o.require((r.s - 2.0) >= 10 * r.s_sigma, fmt((r.s - 2.0) / r.s_sigma, 4) + " sigma above 2");
  return o;
}

// 5 -------------------------------------------------------------------------
Outcome check_no_signaling() {
  Outcome o;
  const auto psi = spdc::TwoPhotonState::bell(spdc::BellState::PsiPlus);
  const double beta = 22.5;
  const std::size_t n = 100000;
  std::array<double, 2> freq{};
  std::array<double, 2> analytic{};
  const double hwp[2] = {0.0, 30.0};
  for (int k = 0; k < 2; ++k) {
    const auto st = spdc::apply_waveplate(psi, spdc::Arm::Alice, hwp[k]);
    analytic[k] = spdc::joint_probabilities(st, 0.0, beta).bob_transmit();
    RngStream rng = derive_stream(5, "acceptance.nosignal", static_cast<std::uint64_t>(k));
    const auto pairs = spdc::generate_pair_count(n, 1e4, rng, st);
    std::size_t t = 0;
    for (const auto& p : spdc::analyze_pairs(pairs, 0.0, beta, rng)) t += p.bob == spdc::Port::Transmit;
    freq[k] = static_cast<double>(t) / n;
  }
  o.require(std::abs(analytic[0] - analytic[1]) < 1e-12, "analytic marginals equal");
  const double sigma =
      std::sqrt(freq[0] * (1 - freq[0]) / n + freq[1] * (1 - freq[1]) / n);
  const double z = std::abs(freq[0] - freq[1]) / sigma;
  o.require(z < 3.0, "Bob P(T) " + fmt(freq[0]) + " vs " + fmt(freq[1]) + ", " + fmt(z, 3) +
                         " sigma");
  return o;
}

// 6 -------------------------------------------------------------------------
Outcome check_rigid_body() {
  Outcome o;
  rigid_body::PlatformParams p;
  p.inertia = {1.0, 2.0, 3.0};
  rigid_body::BodyState s;
  s.attitude = {0.1, 0.2, 0.3};
  s.rate = {0.3, 1.0, 0.2};
  const double e0 = rigid_body::rotational_energy(s, p.inertia);
  const auto l0 = rigid_body::inertial_angular_momentum(s, p.inertia);
  double worst_orth = 0.0, worst_e = 0.0, worst_l = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = rigid_body::step(s, {}, p, 1e-3, k * 1e-3);
    const auto h = rigid_body::rotation_inertial_to_body(s.attitude);
    worst_orth = std::max(worst_orth, (h.transpose() * h - rigid_body::Mat3::Identity()).norm());
    worst_e = std::max(worst_e, std::abs(rigid_body::rotational_energy(s, p.inertia) - e0) / e0);
    worst_l = std::max(
        worst_l, std::abs(rigid_body::inertial_angular_momentum(s, p.inertia).norm() - l0.norm()) /
                     l0.norm());
  }
  o.require(worst_e < 1e-6, "energy drift " + fmt(worst_e, 3));
  o.require(worst_l < 1e-6, "|L| drift " + fmt(worst_l, 3));
  o.require(worst_orth < 1e-9, "orthonormality " + fmt(worst_orth, 3));
  return o;
}

// 7 -------------------------------------------------------------------------
Outcome check_perturbation() {
  Outcome o;
  perturbation::PerturbationProblem p;
  p.eigen = perturbation::EigenSystem::from_energies({0.0, 1.0});
  p.h_prime = perturbation::MatXc::Zero(2, 2);
  p.h_prime(0, 1) = p.h_prime(1, 0) = 1.0;
  p.lambda = 0.02;
  std::vector<double> grid(201);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = 10.0 * qubit::kHbarEvS * k / 200.0;
  const auto r = perturbation::validate_against_ode(p, grid);
  o.require(!r.error && std::abs(r.error_exponent - 2.0) <= 0.2,
            "exponent " + fmt(r.error_exponent, 4));

  // Independent log-log slope from an RK4 reference.
  std::vector<double> errs;
  for (double l : {0.04, 0.02, 0.01}) {
    p.lambda = l;
    const auto h = p.full_hamiltonian();
    perturbation::VecXc psi0 = perturbation::VecXc::Zero(2);
    psi0(0) = 1.0;
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); k += 5) {
      const auto ref = oracle::rk4_schrodinger(h, psi0, grid[k], 4000, qubit::kHbarEvS);
      worst = std::max(worst, (perturbation::first_order_time_state(p, grid[k]).state - ref).norm());
    }
    errs.push_back(worst);
  }
  const double slope = std::log(errs[0] / errs[2]) / std::log(4.0);
  o.require(std::abs(slope - 2.0) <= 0.2, "oracle exponent " + fmt(slope, 4));

  p.lambda = 0.0;
  const auto zero = perturbation::validate_against_ode(p, grid, {});
  o.require(zero.max_error < 1e-12, "lambda=0 error " + fmt(zero.max_error, 3));
  return o;
}

// 8 -------------------------------------------------------------------------
Outcome check_formation() {
  Outcome o;
  const double h = std::sqrt(3.0) / 2.0;
  formation::AgentNetwork net;
  net.offsets = {{1, 0, 0}, {-0.5, h, 0}, {-0.5, -h, 0}};
  net.adjacency = Eigen::MatrixXi::Zero(4, 4);
  for (int i = 1; i <= 3; ++i) {
    net.adjacency(i, 0) = 1;
    net.adjacency(i, i % 3 + 1) = 1;
    net.adjacency(i, (i + 1) % 3 + 1) = 1;
  }
  net.gains = formation::PidGains::uniform(4.0, 0.0, 4.0);
  std::vector<formation::FormationAgent> agents(4);
  for (int i = 1; i <= 3; ++i) agents[static_cast<std::size_t>(i)].state.position = {-1.5 + 0.5 * i, -1.0, 0.0};
  const auto r = formation::simulate_formation(net, agents, {});
  o.require(r.final_error < 1e-3, "error " + fmt(r.initial_error, 4) + " -> " + fmt(r.final_error, 3));

  // Dyadic coordinates: the shift and every difference are exact in binary.
  std::vector<rigid_body::Vec3> pos{{0.25, -0.125, 0.5}, {1.75, 0.375, 0}, {-0.25, 1.125, 0.5}, {0, -2, 1}};
  const std::vector<rigid_body::Vec3> vel{{0.1, 0, 0}, {0, 0.2, 0}, {0, 0, 0.3}, {-0.1, 0, 0}};
  auto moved = pos;
  for (auto& m : moved) m += rigid_body::Vec3(256.0, -128.0, 64.0);
  formation::PidState a = formation::PidState::zeros(3), b = formation::PidState::zeros(3);
  const auto fa = formation::control_forces(net, pos, vel, a);
  const auto fb = formation::control_forces(net, moved, vel, b);
  double diff = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) diff = std::max(diff, (fa[i] - fb[i]).norm());
  o.require(diff == 0.0, "translation invariance " + fmt(diff, 3));
  return o;
}

// 9 -------------------------------------------------------------------------
Outcome check_closed_loop() {
  Outcome o;
  using control::Polynomial;
  using control::RationalTF;
  const RationalTF one = RationalTF::gain(1.0);
  bool exact = true;
  for (double k : {1.0, 4.0, 5.0}) {
    for (double m : {1.0, 2.0, 0.5}) {
      const auto cl = control::closed_loop(RationalTF::gain(k), one,
                                           RationalTF(Polynomial{1.0}, Polynomial{0.0, 0.0, m}), one);
      // K/(m s^2 + K) with a monic denominator.
      exact = exact && cl.numerator() == Polynomial{k / m} && cl.denominator() == Polynomial{k / m, 0.0, 1.0};
    }
  }
  o.require(exact, "K/(ms^2+K) coefficients exact");
  double worst = 0.0;
  for (const auto& s : control::step_response(RationalTF(Polynomial{1.0}, Polynomial{1.0, 1.0}), 10.0, 1e-3)) {
    worst = std::max(worst, std::abs(s.y - (1.0 - std::exp(-s.t))));
  }
  o.require(worst < 1e-6, "1/(s+1) step error " + fmt(worst, 3));
  return o;
}

// 10 ------------------------------------------------------------------------
Outcome check_end_to_end() {
  Outcome o;
  using scenario::Json;
  const auto doc = [](double eve) {
    return Json{{"kind", "combined"},
                {"seed", 10},
                {"bb84", {{"n", 100000}, {"eve_fraction", eve}}},
                {"entangle", {{"pairs", 100000}, {"state", "phi+"}}}};
  };
  const auto eve = scenario::run(scenario::parse_scenario(doc(1.0)));
  const double e0 = eve.summary.value("initial_error", -1.0);
  const double e1 = eve.summary.value("final_error", -2.0);
  o.require(eve.ok() && eve.summary.value("released", -1) == 0 && std::abs(e1 - e0) <= 1e-9 * e0,
            "Eve: " + eve.summary.value("verdict", std::string("?")) + ", released " +
                std::to_string(eve.summary.value("released", -1)) + ", error " + fmt(e0, 4) +
                " -> " + fmt(e1, 4));

  const auto cfg = scenario::parse_scenario(doc(0.0));
  const auto clean = scenario::run(cfg);
  const double c1 = clean.summary.value("final_error", 1.0);
  o.require(clean.ok() && clean.summary.value("converged", false) && c1 < 1e-3,
            "clean: released " + std::to_string(clean.summary.value("released", -1)) +
                ", final error " + fmt(c1, 3));

  const auto again = scenario::run(cfg);
  bool same = again.header == clean.header && again.summary == clean.summary &&
              again.streams == clean.streams;
  for (const auto& [name, t] : clean.tables) {
    const auto it = again.tables.find(name);
    same = same && it != again.tables.end() && it->second.columns == t.columns &&
           it->second.rows == t.rows;
  }
  o.require(same, "rerun identical");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "quantum state statistics", check_quantum_statistics},
      {2, "BB84 ideal channel", check_bb84_ideal},
      {3, "BB84 intercept-resend", check_bb84_eve},
      {4, "CHSH violation", check_chsh},
      {5, "no-signaling", check_no_signaling},
      {6, "rigid-body conservation", check_rigid_body},
      {7, "perturbation lambda^2 scaling", check_perturbation},
      {8, "formation convergence", check_formation},
      {9, "closed loop", check_closed_loop},
      {10, "end-to-end combined scenario", check_end_to_end},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
