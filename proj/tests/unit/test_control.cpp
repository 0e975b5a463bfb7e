#include "qauto/control_loop.hpp"
#include "qauto/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace qauto;
using namespace qauto::control;

namespace {

RationalTF tf(std::initializer_list<double> num, std::initializer_list<double> den) {
  return RationalTF(Polynomial(num), Polynomial(den));
}

std::vector<std::uint8_t> key_bits(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<std::uint8_t> k(n);
  for (auto& b : k) b = static_cast<std::uint8_t>(rng.uniform_index(2));
  return k;
}

}  // namespace

TEST_SUITE("control") {
  TEST_CASE("polynomials") {
    const Polynomial p{1, 2, 0, 0};
    CHECK(p.degree() == 1);
    CHECK(p(3.0) == 7.0);
    CHECK((p * Polynomial{1, 1}) == Polynomial{1, 3, 2});
    CHECK((p + Polynomial{-1, -2}).is_zero());
    CHECK(Polynomial::monomial(2, 3.0) == Polynomial{0, 0, 3});
    CHECK(Polynomial{0, 0, 5}.origin_multiplicity() == 2);
    CHECK_THROWS_AS(Polynomial({1e301}), Error);
    CHECK_THROWS_AS(Polynomial({NAN}), Error);
  }

  TEST_CASE("transfer function arithmetic") {
    CHECK_THROWS_AS(tf({1}, {0}), Error);
    const RationalTF a = tf({1, 2}, {3, 1, 2});
    CHECK(tf_arith(a, RationalTF::gain(1.0), TfOp::Mul) == a);
    CHECK(a.denominator().coefficient(2) == 1.0);

    const RationalTF integ = tf({1}, {0, 1});
    const RationalTF dbl = tf_arith(integ, integ, TfOp::Mul);
    CHECK(dbl.numerator() == Polynomial{1});
    CHECK(dbl.denominator() == Polynomial{0, 0, 1});

    // 1/(s+1) + 1/(s+2) = (2s + 3) / (s^2 + 3s + 2)
    const RationalTF sum = tf_arith(tf({1}, {1, 1}), tf({1}, {2, 1}), TfOp::Add);
    CHECK(sum.numerator() == Polynomial{3, 2});
    CHECK(sum.denominator() == Polynomial{2, 3, 1});
  }

  TEST_CASE("closed loop composition") {
    const RationalTF c = tf({3, 1}, {1, 2}), act = tf({2}, {1, 1}), dyn = tf({1}, {0, 1, 1});
    const RationalTF open = tf_arith(tf_arith(c, act, TfOp::Mul), dyn, TfOp::Mul);
    CHECK(closed_loop(c, act, dyn, RationalTF::zero()) == open);

    const RationalTF one = RationalTF::gain(1.0);
    const RationalTF half = closed_loop(one, one, one, one);
    CHECK(half(0.0) == 0.5);
    CHECK(half(5.0) == 0.5);

    CHECK_THROWS_AS(closed_loop(one, one, one, RationalTF::gain(-1.0)), Error);

    for (double k : {1.0, 4.0, 5.0}) {
      for (double m : {1.0, 2.0, 0.5, 4.0}) {
        const RationalTF cl = closed_loop(RationalTF::gain(k), one, tf({1}, {0, 0, m}), one);
        // K / (m s^2 + K) in monic form.
        CHECK(cl.numerator() == Polynomial{k / m});
        CHECK(cl.denominator() == Polynomial{k / m, 0, 1});
      }
    }
  }

  TEST_CASE("integrating controller gives unit DC gain") {
    const RationalTF c = tf({2, 1}, {0, 1});  // (s + 2) / s
    const RationalTF plant = tf({1}, {1, 3, 1});
    const RationalTF cl = closed_loop(c, RationalTF::gain(1.0), plant, RationalTF::gain(1.0));
    const auto g = dc_gain(cl);
    REQUIRE(g.has_value());
    CHECK(*g == 1.0);
    CHECK(!dc_gain(tf({1}, {0, 1})).has_value());
    const RationalTF cancelled = cancel_origin_factors(tf({0, 0, 2}, {0, 1, 1}));
    CHECK(cancelled.numerator() == Polynomial{0, 2});
    CHECK(cancelled.denominator() == Polynomial{1, 1});
  }

  TEST_CASE("poles and stability") {
    const auto p = poles(tf({1}, {2, 3, 1}));
    REQUIRE(p.size() == 2);
    CHECK(std::abs(std::min(p[0].real(), p[1].real()) + 2.0) < 1e-12);
    CHECK(std::abs(std::max(p[0].real(), p[1].real()) + 1.0) < 1e-12);
    CHECK(is_stable(tf({1}, {1, 1})));
    CHECK(!is_stable(tf({1}, {-1, 1})));
  }

  TEST_CASE("step responses") {
    const auto first = step_response(tf({1}, {1, 1}), 10.0, 1e-3);
    CHECK(first.size() == 10001);
    double worst = 0.0;
    for (const auto& s : first) worst = std::max(worst, std::abs(s.y - (1 - std::exp(-s.t))));
    CHECK(worst < 1e-6);

    for (const auto& s : step_response(RationalTF::gain(1.0), 1.0, 0.1)) CHECK(s.y == 1.0);
    CHECK_THROWS_AS(step_response(tf({0, 1}, {1}), 1.0, 0.1), Error);

    // K/(m s^2 + K), m = 1, K = 4: y = 1 - cos 2t, first peak at pi/2.
    const auto osc = step_response(tf({4}, {4, 0, 1}), 4.0, 1e-4);
    std::size_t peak = 0;
    for (std::size_t k = 1; k + 1 < osc.size(); ++k) {
      if (osc[k].y >= osc[k - 1].y && osc[k].y > osc[k + 1].y) {
        peak = k;
        break;
      }
    }
    REQUIRE(peak > 0);
    const double omega = oracle::kPi / osc[peak].t;
    CHECK(omega == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(osc[peak].y == doctest::Approx(2.0).epsilon(1e-6));
  }

  TEST_CASE("damped oscillator against the closed form") {
    struct Case { double k, m, b; };
    const Case cases[] = {{4, 1, 1}, {1, 1, 0.5}, {10, 2, 3}, {2, 0.5, 0.2}, {9, 1, 4}};
    const RationalTF one = RationalTF::gain(1.0);
    for (const auto& c : cases) {
      const RationalTF cl = closed_loop(RationalTF::gain(c.k), one, tf({1}, {0, c.b, c.m}), one);
      const double wn = std::sqrt(c.k / c.m);
      const double zeta = c.b / (2 * std::sqrt(c.k * c.m));
      REQUIRE(zeta < 1.0);
      double worst = 0.0;
      for (const auto& s : step_response(cl, 10.0, 1e-3)) {
        worst = std::max(worst, std::abs(s.y - oracle::underdamped_step(wn, zeta, s.t)));
      }
      CHECK(worst < 1e-4);
    }
  }

  TEST_CASE("state-space realization") {
    const RationalTF g = tf({1, 2}, {3, 4, 1});
    const StateSpace ss = StateSpace::from_tf(g);
    CHECK(ss.order() == 2);
    // C (sI - A)^-1 B + D at a test point.
    const double s = 0.7;
    const Eigen::MatrixXd m = s * Eigen::MatrixXd::Identity(2, 2) - ss.a;
    const double h = ss.c.dot(m.inverse() * ss.b) + ss.d;
    CHECK(h == doctest::Approx(g(s)).epsilon(1e-12));
    CHECK_THROWS_AS(StateSpace::from_tf(tf({0, 0, 1}, {1, 1})), Error);
  }

  TEST_CASE("ungated run equals the step response") {
    LoopConfig loop;
    loop.plant = tf({1}, {0, 2, 1});
    loop.controller = RationalTF::gain(4.0);
    const Command cmd{0.0, 1.0, {}, 0};
    const auto log = quantum_gated_run(loop, std::span(&cmd, 1), {}, 5.0, 1e-3);
    const auto ref = step_response(loop.closed(), 5.0, 1e-3);
    REQUIRE(log.samples.size() == ref.size());
    for (std::size_t k = 1; k < ref.size(); ++k) {
      REQUIRE(std::abs(log.samples[k].output - ref[k].y) < 1e-12);
    }
  }

  TEST_CASE("key-protected commands") {
    LoopConfig loop;
    loop.plant = tf({1}, {1, 1});
    loop.controller = RationalTF::gain(9.0);
    loop.gate = QuantumGate::KeyProtected;
    const auto key = key_bits(4096, 1);

    bb84::OneTimePad tx(key);
    std::vector<Command> cmds{{0.0, 1.0, seal_setpoint(1, 1.0, tx), 1},
                              {2.0, 3.0, seal_setpoint(2, 3.0, tx), 2}};
    bb84::OneTimePad rx(key);
    GateInputs in;
    in.receiver_pad = &rx;
    const auto good = quantum_gated_run(loop, cmds, in, 4.0, 1e-3);

    LoopConfig plain = loop;
    plain.gate = QuantumGate::None;
    const auto ref = quantum_gated_run(plain, cmds, {}, 4.0, 1e-3);
    REQUIRE(good.samples.size() == ref.samples.size());
    for (std::size_t k = 0; k < ref.samples.size(); ++k) {
      REQUIRE(good.samples[k].output == ref.samples[k].output);
    }

    // Corrupt the second frame: the loop keeps tracking setpoint 1.
    cmds[1].frame[6] ^= 1;
    bb84::OneTimePad rx2(key);
    in.receiver_pad = &rx2;
    const auto bad = quantum_gated_run(loop, cmds, in, 4.0, 1e-3);
    REQUIRE(bad.decisions.size() == 2);
    CHECK(bad.decisions[0].action == GateAction::Released);
    CHECK(bad.decisions[1].action == GateAction::Held);
    CHECK(bad.samples.back().setpoint == 1.0);
    CHECK(bad.samples.back().output == doctest::Approx(0.9).epsilon(1e-4));

    bb84::OneTimePad tiny(std::vector<std::uint8_t>(8, 0));
    in.receiver_pad = &tiny;
    CHECK_THROWS_AS(quantum_gated_run(loop, cmds, in, 4.0, 1e-3), Error);
  }

  TEST_CASE("entanglement-triggered commands") {
    LoopConfig loop;
    loop.plant = tf({1}, {1, 1});
    loop.gate = QuantumGate::EntanglementTriggered;
    GateInputs in;
    in.triggers = {{1.0, 2.0}};
    const double dt = 1e-3;

    const Command late{1.5, 2.0, {}, 0};
    const auto a = quantum_gated_run(loop, std::span(&late, 1), in, 3.0, dt);
    REQUIRE(a.decisions.size() == 1);
    CHECK(a.decisions[0].action == GateAction::Released);
    CHECK(a.decisions[0].time == doctest::Approx(1.5));

    const Command early{0.5, 2.0, {}, 0};
    const auto b = quantum_gated_run(loop, std::span(&early, 1), in, 3.0, dt);
    REQUIRE(b.decisions.size() == 2);
    CHECK(b.decisions[0].action == GateAction::Deferred);
    CHECK(b.decisions[0].time == doctest::Approx(0.5));
    CHECK(b.decisions[1].action == GateAction::Released);
    CHECK(b.decisions[1].time == doctest::Approx(1.0));
    for (const auto& s : b.samples) {
      if (s.t < 1.0 - dt / 2) REQUIRE(s.setpoint == 0.0);
      if (s.t > 1.0 + dt / 2) REQUIRE(s.setpoint == 2.0);
    }
  }
}
