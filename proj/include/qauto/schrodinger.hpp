#pragma once

// Time evolution of a two-level system, energies in eV and times in s.

#include "qauto/qubit.hpp"

#include <vector>

namespace qauto::schrodinger {

using qubit::Complex;
using qubit::Operator2;
using qubit::Qubit;

/// Hermitian 2x2 energy operator (eV). Throws NonHermitian.
class Hamiltonian {
 public:
  explicit Hamiltonian(const Operator2& m);

  static Hamiltonian diagonal(double e1, double e2);

  const Operator2& matrix() const { return m_; }

 private:
  Operator2 m_;
};

/// exp(-i H t / hbar) via the 2x2 eigendecomposition.
Operator2 propagator(const Hamiltonian& h, double t);

/// psi(t) = exp(-i H t / hbar) psi(0).
Qubit evolve_static(const Hamiltonian& h, const Qubit& psi0, double t);

/// First-order generator form I - (i/hbar) H dt. Not unitary: the defect
/// ||U^dagger U - I|| grows as dt^2.
Operator2 infinitesimal_propagator(const Hamiltonian& h, double dt);

struct DriveTerm {
  Operator2 amplitude;  // V_l (eV)
  int harmonic = 0;     // l
};

/// H'(t) = sum_l V_l exp(-i l eps t / hbar). Terms must come in pairs with
/// V_{-l} = V_l^dagger (and V_0 Hermitian) so that H'(t) is Hermitian;
/// single-sided drives throw NonHermitian.
class HarmonicDrive {
 public:
  HarmonicDrive() = default;
  HarmonicDrive(std::vector<DriveTerm> terms, double quantum_ev);

  /// Cosine drive: V exp(-i eps t/hbar) + V^dagger exp(+i eps t/hbar).
  static HarmonicDrive resonant_pair(const Operator2& v, double quantum_ev);

  Operator2 at(double t) const;
  bool empty() const { return terms_.empty(); }
  const std::vector<DriveTerm>& terms() const { return terms_; }
  double quantum() const { return quantum_; }

 private:
  std::vector<DriveTerm> terms_;
  double quantum_ = 0.0;
};

/// Steps psi with exp(-i H(t_mid) h / hbar), H = H0 + H'(t), over
/// ceil(t/dt) equal steps of length h = t / steps <= dt. Throws
/// InvalidArgument for dt <= 0 or t < 0.
Qubit evolve_driven(const Hamiltonian& h0, const HarmonicDrive& drive, const Qubit& psi0,
                    double t, double dt);

/// <psi|H|psi> in eV.
double expectation(const Hamiltonian& h, const Qubit& psi);

}  // namespace qauto::schrodinger
