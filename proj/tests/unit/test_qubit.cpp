#include "qauto/error.hpp"
#include "qauto/qubit.hpp"
#include "qauto/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace qauto;
using namespace qauto::qubit;

namespace {

Qubit random_state(RngStream& rng) {
  return Qubit::ket({rng.normal(), rng.normal()}, {rng.normal(), rng.normal()});
}

Eigen::Vector3d random_axis(RngStream& rng) {
  return Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
}

}  // namespace

TEST_SUITE("qubit") {
  TEST_CASE("ket normalizes") {
    const Qubit z = Qubit::ket(1.0, 0.0);
    CHECK(std::abs(inner(z, z) - Complex(1.0)) < 1e-15);
    const Qubit x = Qubit::ket(1.0, 1.0);
    CHECK(std::abs(x.c_plus() - Complex(1 / std::sqrt(2.0))) < 1e-15);
    CHECK(std::abs(x.c_minus() - Complex(1 / std::sqrt(2.0))) < 1e-15);
    const Qubit two = Qubit::ket(2.0, 0.0);
    CHECK(two.c_plus() == Complex(1.0));
    CHECK(two.c_minus() == Complex(0.0));
    try {
      (void)Qubit::ket(0.0, 0.0);
      FAIL("expected ZeroVector");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroVector);
    }
  }

  TEST_CASE("inner products") {
    CHECK(inner(Qubit::minus_z(), Qubit::plus_z()) == Complex(0.0));
    CHECK(std::abs(inner(Qubit::plus_z(), Qubit::plus_x()) - Complex(1 / std::sqrt(2.0))) <
          1e-15);
    // Conjugate-linear in the bra.
    const Qubit a = Qubit::ket({0, 1}, 1.0), b = Qubit::ket(1.0, {0, 2});
    CHECK(std::abs(inner(a, b) - std::conj(inner(b, a))) < 1e-15);
    RngStream rng(1);
    for (int i = 0; i < 1000; ++i) {
      const Qubit s = random_state(rng);
      REQUIRE(std::abs(inner(s, s) - Complex(1.0)) < 1e-12);
    }
  }

  TEST_CASE("probabilities") {
    CHECK(probability(Qubit::plus_x(), Qubit::plus_z()) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(probability(Qubit::plus_z(), Qubit::plus_z()) == 1.0);
    RngStream rng(2);
    for (int i = 0; i < 1000; ++i) {
      const Qubit s = random_state(rng);
      REQUIRE(probability(s, Qubit::plus_z()) + probability(s, Qubit::minus_z()) ==
              doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  TEST_CASE("rotation about y by pi/2 takes +z to +x") {
    const Operator2 r = rotation(Eigen::Vector3d::UnitY(), oracle::kPi / 2);
    CHECK(same_ray(apply_unitary(r, Qubit::plus_z()), Qubit::plus_x(), 1e-12));
    CHECK(rotation(Eigen::Vector3d(0.6, 0, 0.8), 0.0).isIdentity(0.0));
    CHECK_THROWS_AS(rotation(Eigen::Vector3d(1, 1, 0), 0.1), Error);
  }

  TEST_CASE("infinitesimal rotation matches the generator to second order") {
    const double dphi = 1e-4;
    const Operator2 r = rotation(Eigen::Vector3d::UnitZ(), dphi);
    const Operator2 jz = angular_momentum(Eigen::Vector3d::UnitZ());
    const Operator2 lin = Operator2::Identity() - Complex(0, dphi / kHbarEvS) * jz;
    CHECK((r - lin).norm() <= dphi * dphi / 2.0);
  }

  TEST_CASE("rotations compose and are unitary") {
    RngStream rng(3);
    for (int i = 0; i < 200; ++i) {
      const Eigen::Vector3d n = random_axis(rng);
      const double t1 = rng.uniform() * 6, t2 = rng.uniform() * 6;
      const Operator2 a = rotation(n, t1) * rotation(n, t2);
      const Operator2 b = rotation(n, t1 + t2);
      REQUIRE(std::abs(std::abs((a.adjoint() * b).trace()) - 2.0) < 1e-10);
      REQUIRE(unitarity_defect(a) < 1e-12);
      const Qubit s = random_state(rng);
      REQUIRE(std::abs(apply_unitary(b, s).norm() - 1.0) < 1e-12);
    }
  }

  TEST_CASE("full turn flips the sign but not the probabilities") {
    RngStream rng(4);
    for (int i = 0; i < 50; ++i) {
      const Eigen::Vector3d n = random_axis(rng);
      const Qubit s = random_state(rng);
      const Qubit t = apply_unitary(rotation(n, 2 * oracle::kPi), s);
      for (const Qubit& target : {Qubit::plus_z(), Qubit::plus_x(), Qubit::minus_z()}) {
        REQUIRE(probability(t, target) == doctest::Approx(probability(s, target)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("apply_unitary rejects non-unitary operators") {
    Operator2 m = Operator2::Identity();
    m(0, 0) = 1.1;
    CHECK_THROWS_AS(apply_unitary(m, Qubit::plus_z()), Error);
  }

  TEST_CASE("measurement collapses") {
    RngStream rng(5);
    for (int i = 0; i < 100; ++i) {
      const auto r = measure(Qubit::plus_z(), MeasurementBasis::z(), rng);
      REQUIRE(r.outcome == Outcome::Plus);
      REQUIRE(r.probability == 1.0);
    }
    const auto r = measure(Qubit::plus_x(), MeasurementBasis::z(), rng);
    const Qubit expected = r.outcome == Outcome::Plus ? Qubit::plus_z() : Qubit::minus_z();
    CHECK(same_ray(r.post_state, expected));
    CHECK(r.probability == doctest::Approx(0.5));
  }

  TEST_CASE("measurement frequencies") {
    const std::size_t n = 100000;
    const auto freq = [&](const Qubit& s, const MeasurementBasis& b, std::uint64_t seed) {
      RngStream rng(seed);
      std::size_t plus = 0;
      for (std::size_t i = 0; i < n; ++i) plus += measure(s, b, rng).outcome == Outcome::Plus;
      return plus;
    };
    CHECK(std::abs(freq(Qubit::plus_x(), MeasurementBasis::z(), 6) / double(n) - 0.5) < 0.005);
    CHECK(std::abs(freq(Qubit::plus_z(), MeasurementBasis::angle(oracle::deg(30)), 7) / double(n) -
                   0.75) < 0.005);
  }

  TEST_CASE("chi-square against the Born rule for 20 state/basis pairs") {
    RngStream pick(8);
    const std::size_t n = 100000;
    for (int k = 0; k < 20; ++k) {
      const Qubit s = random_state(pick);
      const double theta = pick.uniform() * oracle::kPi;
      // Born probability written out directly.
      const Complex amp = std::cos(theta) * s.c_plus() + std::sin(theta) * s.c_minus();
      const double p = std::norm(amp);
      RngStream rng = derive_stream(100, "test.chi2", static_cast<std::uint64_t>(k));
      std::size_t plus = 0;
      const auto basis = MeasurementBasis::angle(theta);
      for (std::size_t i = 0; i < n; ++i) plus += measure(s, basis, rng).outcome == Outcome::Plus;
      if (p < 1e-6 || p > 1 - 1e-6) continue;
      CHECK(oracle::chi2_1dof_p(oracle::chi2_binary(plus, n, p)) > 0.001);
    }
  }
}
