#pragma once

// Two-level state algebra in the S_z basis. Polarization uses the same
// representation: |H> = |+z> (bit 0), |V> = |-z> (bit 1), and linear
// polarization at angle theta is cos(theta)|H> + sin(theta)|V>.

#include "qauto/rng.hpp"

#include <Eigen/Dense>

#include <complex>

namespace qauto::qubit {

using Complex = std::complex<double>;
using Operator2 = Eigen::Matrix2cd;
using Vec2c = Eigen::Vector2cd;

/// Reduced Planck constant, eV*s and erg*s.
inline constexpr double kHbarEvS = 6.582e-16;
inline constexpr double kHbarErgS = 1.055e-27;

class Qubit {
 public:
  /// |+z>.
  Qubit() : amp_(1.0, 0.0) {}

  /// Normalizes (c_plus, c_minus). Throws ZeroVector.
  static Qubit ket(Complex c_plus, Complex c_minus);
  static Qubit from_vector(const Vec2c& v) { return ket(v[0], v[1]); }
  /// Wraps amplitudes that are unit norm up to rounding, without
  /// renormalizing, so that propagated norm errors stay observable.
  static Qubit unnormalized(const Vec2c& v) { return Qubit(v); }

  static Qubit plus_z() { return ket(1.0, 0.0); }
  static Qubit minus_z() { return ket(0.0, 1.0); }
  static Qubit plus_x();
  static Qubit minus_x();
  /// cos(theta)|+z> + sin(theta)|-z>, theta in radians.
  static Qubit linear_polarization(double theta);

  Complex c_plus() const { return amp_[0]; }
  Complex c_minus() const { return amp_[1]; }
  const Vec2c& vector() const { return amp_; }
  double norm() const { return amp_.norm(); }

 private:
  explicit Qubit(const Vec2c& amp) : amp_(amp) {}
  Vec2c amp_;
};

/// <bra|ket> = conj(bra+) ket+ + conj(bra-) ket-.
Complex inner(const Qubit& bra, const Qubit& ket);

/// |<target|state>|^2.
double probability(const Qubit& state, const Qubit& target);

/// True when the states agree up to a global phase (|<a|b>| = 1 within tol).
bool same_ray(const Qubit& a, const Qubit& b, double tol = 1e-12);

/// Pauli matrices.
Operator2 pauli_x();
Operator2 pauli_y();
Operator2 pauli_z();

/// n.J = (hbar/2) n.sigma in eV*s.
Operator2 angular_momentum(const Eigen::Vector3d& axis);

/// exp(-i angle n.J / hbar) = cos(angle/2) I - i sin(angle/2) n.sigma.
/// Throws NonUnitAxis when |n| deviates from 1 by more than 1e-9.
Operator2 rotation(const Eigen::Vector3d& axis, double angle);

/// ||U^dagger U - I||_F.
double unitarity_defect(const Operator2& u);

/// Applies an operator that must be unitary within 1e-12 (throws
/// InvalidArgument otherwise).
Qubit apply_unitary(const Operator2& u, const Qubit& psi);

enum class Outcome { Plus, Minus };

/// Orthonormal measurement basis: outcome Plus projects onto plus_state.
class MeasurementBasis {
 public:
  static MeasurementBasis z() { return angle(0.0); }
  static MeasurementBasis x();
  /// Linear-polarization analyzer at angle theta (radians).
  static MeasurementBasis angle(double theta);

  const Qubit& plus_state() const { return plus_; }
  const Qubit& minus_state() const { return minus_; }

 private:
  MeasurementBasis(Qubit plus, Qubit minus) : plus_(plus), minus_(minus) {}
  Qubit plus_;
  Qubit minus_;
};

struct MeasurementRecord {
  Outcome outcome = Outcome::Plus;
  double probability = 1.0;  // Born probability of the observed outcome
  Qubit post_state;
};

/// Samples the Born rule with one uniform draw and collapses the state.
MeasurementRecord measure(const Qubit& state, const MeasurementBasis& basis, RngStream& rng);

}  // namespace qauto::qubit
