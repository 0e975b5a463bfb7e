#include "qauto/qubit.hpp"

#include "qauto/error.hpp"

#include <cmath>
#include <numbers>

namespace qauto::qubit {

namespace {
constexpr Complex kI{0.0, 1.0};
}

Qubit Qubit::ket(Complex c_plus, Complex c_minus) {
  const double norm = std::sqrt(std::norm(c_plus) + std::norm(c_minus));
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::ZeroVector, "state amplitudes must be finite and not both zero");
  }
  return Qubit(Vec2c(c_plus / norm, c_minus / norm));
}

Qubit Qubit::plus_x() { return ket(1.0, 1.0); }
Qubit Qubit::minus_x() { return ket(1.0, -1.0); }

Qubit Qubit::linear_polarization(double theta) {
  return Qubit(Vec2c(std::cos(theta), std::sin(theta)));
}

Complex inner(const Qubit& bra, const Qubit& ket) {
  return std::conj(bra.c_plus()) * ket.c_plus() + std::conj(bra.c_minus()) * ket.c_minus();
}

double probability(const Qubit& state, const Qubit& target) {
  return std::norm(inner(target, state));
}

bool same_ray(const Qubit& a, const Qubit& b, double tol) {
  return std::abs(std::abs(inner(a, b)) - 1.0) <= tol;
}

Operator2 pauli_x() {
  Operator2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Operator2 pauli_y() {
  Operator2 m;
  m << 0.0, -kI, kI, 0.0;
  return m;
}

Operator2 pauli_z() {
  Operator2 m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

namespace {
Operator2 n_dot_sigma(const Eigen::Vector3d& n) {
  return n.x() * pauli_x() + n.y() * pauli_y() + n.z() * pauli_z();
}
}  // namespace

Operator2 angular_momentum(const Eigen::Vector3d& axis) {
  return (kHbarEvS / 2.0) * n_dot_sigma(axis);
}

Operator2 rotation(const Eigen::Vector3d& axis, double angle) {
  if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::NonUnitAxis, "rotation axis must be a unit vector");
  }
  return std::cos(angle / 2.0) * Operator2::Identity() -
         kI * std::sin(angle / 2.0) * n_dot_sigma(axis);
}

double unitarity_defect(const Operator2& u) {
  return (u.adjoint() * u - Operator2::Identity()).norm();
}

Qubit apply_unitary(const Operator2& u, const Qubit& psi) {
  if (unitarity_defect(u) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "operator is not unitary");
  }
  return Qubit::unnormalized(u * psi.vector());
}

MeasurementBasis MeasurementBasis::x() { return angle(std::numbers::pi / 4.0); }

MeasurementBasis MeasurementBasis::angle(double theta) {
  return {Qubit::linear_polarization(theta),
          Qubit::linear_polarization(theta + std::numbers::pi / 2.0)};
}

MeasurementRecord measure(const Qubit& state, const MeasurementBasis& basis, RngStream& rng) {
  const double p_plus = probability(state, basis.plus_state());
  if (rng.uniform() < p_plus) return {Outcome::Plus, p_plus, basis.plus_state()};
  return {Outcome::Minus, 1.0 - p_plus, basis.minus_state()};
}

}  // namespace qauto::qubit
