#pragma once

// Laplace-domain solution of i hbar d/dt psi = (H0 + lambda H') psi for a
// time-independent perturbation. Transforming gives
//   (H0 + lambda H' - i hbar s) Psi(s) = -i hbar psi(0),
// and expanding Psi(s) = sum_n lambda^n Psi^(n)(s) over the eigenbasis of
// H0 yields rational coefficients C_m^(n)(s) with poles at E_m / (i hbar).

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qauto::perturbation {

using Complex = std::complex<double>;
using VecXc = Eigen::VectorXcd;
using MatXc = Eigen::MatrixXcd;

/// Dense polynomial with complex coefficients, ascending powers.
class ComplexPolynomial {
 public:
  ComplexPolynomial() = default;
  explicit ComplexPolynomial(std::vector<Complex> coefficients);

  Complex operator()(Complex s) const;
  ComplexPolynomial derivative() const;
  ComplexPolynomial operator*(const ComplexPolynomial& rhs) const;

  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<Complex>& coefficients() const { return c_; }
  bool is_zero() const { return c_.empty(); }

 private:
  std::vector<Complex> c_;  // trailing zeros trimmed
};

struct Pole {
  Complex location;
  int multiplicity = 1;
};

/// numerator(s) / (lead * prod_k (s - p_k)^m_k), strictly proper. The
/// denominator is kept factored so pole locations are exact.
class RationalFunction {
 public:
  RationalFunction() = default;
  RationalFunction(ComplexPolynomial numerator, Complex lead, std::vector<Pole> poles);

  Complex operator()(Complex s) const;
  ComplexPolynomial denominator() const;

  const ComplexPolynomial& numerator() const { return num_; }
  Complex lead() const { return lead_; }
  const std::vector<Pole>& poles() const { return poles_; }
  bool is_zero() const { return num_.is_zero(); }

  /// lim_{s -> p} (s - p)^m F(s) for the pole at p.
  Complex leading_residue(const Pole& pole) const;

  /// Inverse Laplace transform at t >= 0 by residues of F(s) e^{st}.
  /// Supports pole multiplicity up to 2.
  Complex inverse_laplace(double t) const;

 private:
  ComplexPolynomial num_;
  Complex lead_{1.0, 0.0};
  std::vector<Pole> poles_;
};

/// Eigen-decomposition of the unperturbed Hamiltonian, energies ascending.
struct EigenSystem {
  Eigen::VectorXd energies;  // eV
  MatXc vectors;             // column m is phi_m

  static EigenSystem from_hamiltonian(const MatXc& h0);
  /// Diagonal H0 with the standard basis as eigenvectors.
  static EigenSystem from_energies(const std::vector<double>& energies);

  Eigen::Index dimension() const { return energies.size(); }
  MatXc hamiltonian() const;
};

struct PerturbationProblem {
  EigenSystem eigen;
  MatXc h_prime;  // eV, Hermitian
  double lambda = 0.0;
  Eigen::Index initial_index = 0;  // psi(0) = phi_initial

  /// Throws InvalidArgument / NonHermitian.
  void validate() const;
  /// <phi_m | H' | phi_k>.
  Complex matrix_element(Eigen::Index m, Eigen::Index k) const;
  MatXc full_hamiltonian() const { return eigen.hamiltonian() + lambda * h_prime; }
};

/// Coefficients C_m^(n)(s) of one order, indexed by eigenstate m.
struct SDomainState {
  int order = 0;
  std::vector<RationalFunction> coefficients;

  /// sum_m C_m(s) phi_m.
  VecXc evaluate(const EigenSystem& eigen, Complex s) const;
  /// sum_m L^-1[C_m](t) phi_m, by numerical partial fractions.
  VecXc inverse(const EigenSystem& eigen, double t) const;
};

/// C_k^(0) = i hbar / (i hbar s - E_k), all others zero.
SDomainState zeroth_order(const PerturbationProblem& problem);

/// C_m^(1) = i hbar H'_mk / ((i hbar s - E_m)(i hbar s - E_k)).
SDomainState first_order_coefficients(const PerturbationProblem& problem);

/// Residual of one level of the order hierarchy at a point s:
///   n = 0: (H0 - i hbar s) Psi^(0) + i hbar psi(0)
///   n > 0: (H0 - i hbar s) Psi^(n) + H' Psi^(n-1)
VecXc hierarchy_residual(const PerturbationProblem& problem, const VecXc& psi_n,
                         const VecXc* psi_previous, int order, Complex s);

/// Psi^(2)(s) = -(H0 - i hbar s)^-1 H' Psi^(1)(s), evaluated pointwise.
VecXc second_order_at(const PerturbationProblem& problem, Complex s);

struct FirstOrderState {
  VecXc state;              // truncated at order lambda, not renormalized
  double norm_defect = 0.0;  // | ||state|| - 1 |
};

/// psi(t) = [1 - i lambda t H'_kk / hbar] phi_k e^{-i E_k t/hbar}
///        + lambda sum_{m != k} H'_mk / (E_k - E_m)
///                 (e^{-i E_k t/hbar} - e^{-i E_m t/hbar}) phi_m.
/// Throws DegenerateSpectrum when some E_m (m != k) equals E_k.
FirstOrderState first_order_time_state(const PerturbationProblem& problem, double t);

/// exp(-i H t / hbar) psi0 for a Hermitian n x n matrix.
VecXc exact_evolution(const MatXc& h, const VecXc& psi0, double t);

struct SweepRow {
  double lambda = 0.0;
  double max_error = 0.0;
  double max_norm_defect = 0.0;
};

struct ValidationReport {
  double max_error = 0.0;  // at the problem's own lambda
  std::vector<SweepRow> sweep;
  double error_exponent = 0.0;        // log-log slope of max_error vs lambda
  double norm_defect_exponent = 0.0;  // same for the norm defect
  std::optional<std::string> error;   // set instead of throwing
};

inline constexpr double kDefaultSweepValues[] = {0.04, 0.02, 0.01};
inline constexpr std::span<const double> kDefaultSweep{kDefaultSweepValues};

/// Compares first_order_time_state against exact evolution under
/// H0 + lambda H' over t_grid, for the problem's lambda and each sweep value.
ValidationReport validate_against_ode(const PerturbationProblem& problem,
                                      std::span<const double> t_grid,
                                      std::span<const double> lambdas = kDefaultSweep);

/// Least-squares slope of log(y) against log(x).
double fitted_exponent(std::span<const double> x, std::span<const double> y);

}  // namespace qauto::perturbation
