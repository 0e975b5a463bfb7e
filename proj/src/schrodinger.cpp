#include "qauto/schrodinger.hpp"

#include "qauto/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>

namespace qauto::schrodinger {

namespace {

constexpr Complex kI{0.0, 1.0};
using qubit::kHbarEvS;

bool is_hermitian(const Operator2& m, double tol = 1e-12) {
  return (m - m.adjoint()).norm() <= tol * std::max(1.0, m.norm());
}

Operator2 exp_hermitian(const Operator2& h, double t) {
  Eigen::SelfAdjointEigenSolver<Operator2> eig(h);
  const Eigen::Vector2d e = eig.eigenvalues();
  const Operator2& v = eig.eigenvectors();
  Eigen::Vector2cd phases;
  for (int k = 0; k < 2; ++k) phases[k] = std::exp(-kI * (e[k] * t / kHbarEvS));
  return v * phases.asDiagonal() * v.adjoint();
}

}  // namespace

Hamiltonian::Hamiltonian(const Operator2& m) : m_(m) {
  if (!m.allFinite() || !is_hermitian(m)) {
    throw Error(ErrorCode::NonHermitian, "Hamiltonian must be Hermitian");
  }
}

Hamiltonian Hamiltonian::diagonal(double e1, double e2) {
  Operator2 m = Operator2::Zero();
  m(0, 0) = e1;
  m(1, 1) = e2;
  return Hamiltonian(m);
}

Operator2 propagator(const Hamiltonian& h, double t) { return exp_hermitian(h.matrix(), t); }

Qubit evolve_static(const Hamiltonian& h, const Qubit& psi0, double t) {
  return Qubit::unnormalized(propagator(h, t) * psi0.vector());
}

Operator2 infinitesimal_propagator(const Hamiltonian& h, double dt) {
  return Operator2::Identity() - (kI * dt / kHbarEvS) * h.matrix();
}

HarmonicDrive::HarmonicDrive(std::vector<DriveTerm> terms, double quantum_ev)
    : terms_(std::move(terms)), quantum_(quantum_ev) {
  // Sum amplitudes per harmonic, then require V_{-l} = V_l^dagger.
  std::map<int, Operator2> by_harmonic;
  for (const auto& term : terms_) {
    if (!term.amplitude.allFinite()) {
      throw Error(ErrorCode::NonHermitian, "drive amplitude is not finite");
    }
    auto [it, inserted] = by_harmonic.try_emplace(term.harmonic, Operator2::Zero());
    it->second += term.amplitude;
  }
  for (const auto& [l, v] : by_harmonic) {
    const auto partner = by_harmonic.find(-l);
    const Operator2 mirror = partner == by_harmonic.end() ? Operator2::Zero() : partner->second;
    if ((mirror - v.adjoint()).norm() > 1e-12 * std::max(1.0, v.norm())) {
      throw Error(ErrorCode::NonHermitian,
                  "drive harmonic " + std::to_string(l) + " lacks its conjugate partner");
    }
  }
  if (!std::isfinite(quantum_)) {
    throw Error(ErrorCode::InvalidArgument, "drive energy quantum must be finite");
  }
}

HarmonicDrive HarmonicDrive::resonant_pair(const Operator2& v, double quantum_ev) {
  return HarmonicDrive({{v, 1}, {v.adjoint(), -1}}, quantum_ev);
}

Operator2 HarmonicDrive::at(double t) const {
  Operator2 h = Operator2::Zero();
  for (const auto& term : terms_) {
    h += term.amplitude * std::exp(-kI * (term.harmonic * quantum_ * t / kHbarEvS));
  }
  return h;
}

Qubit evolve_driven(const Hamiltonian& h0, const HarmonicDrive& drive, const Qubit& psi0,
                    double t, double dt) {
  if (!(dt > 0.0) || !(t >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "evolve_driven needs dt > 0 and t >= 0");
  }
  if (t == 0.0) return psi0;
  const auto steps = static_cast<long long>(std::ceil(t / dt - 1e-12));
  const double h = t / static_cast<double>(steps);
  qubit::Vec2c psi = psi0.vector();
  for (long long k = 0; k < steps; ++k) {
    const double t_mid = (static_cast<double>(k) + 0.5) * h;
    Operator2 total = h0.matrix() + drive.at(t_mid);
    total = 0.5 * (total + total.adjoint());  // strip rounding asymmetry
    psi = exp_hermitian(total, h) * psi;
  }
  return Qubit::unnormalized(psi);
}

double expectation(const Hamiltonian& h, const Qubit& psi) {
  return (psi.vector().adjoint() * h.matrix() * psi.vector())(0, 0).real();
}

}  // namespace qauto::schrodinger
