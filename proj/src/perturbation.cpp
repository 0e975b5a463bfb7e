#include "qauto/perturbation.hpp"

#include "qauto/error.hpp"
#include "qauto/qubit.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qauto::perturbation {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kHbar = qubit::kHbarEvS;
constexpr Complex kIHbar{0.0, kHbar};

Complex pole_of(double energy) { return energy / kIHbar; }

double spectrum_scale(const Eigen::VectorXd& energies) {
  return energies.size() == 0 ? 0.0 : energies.cwiseAbs().maxCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// ComplexPolynomial

ComplexPolynomial::ComplexPolynomial(std::vector<Complex> coefficients)
    : c_(std::move(coefficients)) {
  while (!c_.empty() && c_.back() == Complex{}) c_.pop_back();
}

Complex ComplexPolynomial::operator()(Complex s) const {
  Complex acc{};
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

ComplexPolynomial ComplexPolynomial::derivative() const {
  if (c_.size() <= 1) return {};
  std::vector<Complex> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
  return ComplexPolynomial(std::move(d));
}

ComplexPolynomial ComplexPolynomial::operator*(const ComplexPolynomial& rhs) const {
  if (is_zero() || rhs.is_zero()) return {};
  std::vector<Complex> out(c_.size() + rhs.c_.size() - 1);
  for (std::size_t i = 0; i < c_.size(); ++i) {
    for (std::size_t j = 0; j < rhs.c_.size(); ++j) out[i + j] += c_[i] * rhs.c_[j];
  }
  return ComplexPolynomial(std::move(out));
}

// ---------------------------------------------------------------------------
// RationalFunction

RationalFunction::RationalFunction(ComplexPolynomial numerator, Complex lead,
                                   std::vector<Pole> poles)
    : num_(std::move(numerator)), lead_(lead) {
  double scale = 0.0;
  for (const auto& p : poles) scale = std::max(scale, std::abs(p.location));
  const double tol = 1e-9 * scale;
  for (const auto& p : poles) {
    auto same = std::find_if(poles_.begin(), poles_.end(), [&](const Pole& q) {
      return std::abs(q.location - p.location) <= tol;
    });
    if (same == poles_.end()) {
      poles_.push_back(p);
    } else {
      same->multiplicity += p.multiplicity;
    }
  }
  int total = 0;
  for (const auto& p : poles_) total += p.multiplicity;
  if (num_.degree() >= total) {
    throw Error(ErrorCode::InvalidArgument, "rational function must be strictly proper");
  }
}

ComplexPolynomial RationalFunction::denominator() const {
  ComplexPolynomial d({lead_});
  for (const auto& p : poles_) {
    for (int k = 0; k < p.multiplicity; ++k) d = d * ComplexPolynomial({-p.location, 1.0});
  }
  return d;
}

Complex RationalFunction::operator()(Complex s) const {
  Complex den = lead_;
  for (const auto& p : poles_) den *= std::pow(s - p.location, p.multiplicity);
  return num_(s) / den;
}

namespace {

// D(s) = lead * prod_{q != p} (s - q)^m_q and sum_{q != p} m_q / (s - q).
struct Reduced {
  Complex den;
  Complex log_derivative;
};

Reduced reduced_denominator(const std::vector<Pole>& poles, Complex lead, const Pole& skip,
                            Complex s) {
  Reduced r{lead, Complex{}};
  for (const auto& q : poles) {
    if (&q == &skip) continue;
    r.den *= std::pow(s - q.location, q.multiplicity);
    r.log_derivative += static_cast<double>(q.multiplicity) / (s - q.location);
  }
  return r;
}

}  // namespace

Complex RationalFunction::leading_residue(const Pole& pole) const {
  for (const auto& p : poles_) {
    if (std::abs(p.location - pole.location) <= 1e-9 * std::max(1.0, std::abs(p.location))) {
      const Reduced r = reduced_denominator(poles_, lead_, p, p.location);
      return num_(p.location) / r.den;
    }
  }
  return {};
}

Complex RationalFunction::inverse_laplace(double t) const {
  if (is_zero()) return {};
  const ComplexPolynomial dnum = num_.derivative();
  Complex acc{};
  for (const auto& p : poles_) {
    const Reduced r = reduced_denominator(poles_, lead_, p, p.location);
    const Complex g = num_(p.location) / r.den;
    const Complex e = std::exp(p.location * t);
    if (p.multiplicity == 1) {
      acc += g * e;
    } else if (p.multiplicity == 2) {
      const Complex dg = (dnum(p.location) - num_(p.location) * r.log_derivative) / r.den;
      acc += (dg + t * g) * e;
    } else {
      throw Error(ErrorCode::InvalidArgument, "poles of multiplicity > 2 are not supported");
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Eigen system and problem

EigenSystem EigenSystem::from_hamiltonian(const MatXc& h0) {
  if (h0.rows() != h0.cols() || h0.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, "H0 must be a non-empty square matrix");
  }
  if ((h0 - h0.adjoint()).norm() > 1e-12 * std::max(1.0, h0.norm())) {
    throw Error(ErrorCode::NonHermitian, "H0 must be Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<MatXc> eig(h0);
  return {eig.eigenvalues(), eig.eigenvectors()};
}

EigenSystem EigenSystem::from_energies(const std::vector<double>& energies) {
  std::vector<double> sorted = energies;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<Eigen::Index>(sorted.size());
  return {Eigen::Map<const Eigen::VectorXd>(sorted.data(), n), MatXc::Identity(n, n)};
}

MatXc EigenSystem::hamiltonian() const {
  return vectors * energies.cast<Complex>().asDiagonal() * vectors.adjoint();
}

void PerturbationProblem::validate() const {
  const Eigen::Index n = eigen.dimension();
  if (n == 0 || eigen.vectors.rows() != n || eigen.vectors.cols() != n) {
    throw Error(ErrorCode::InvalidArgument, "eigen system is malformed");
  }
  if ((eigen.vectors.adjoint() * eigen.vectors - MatXc::Identity(n, n)).norm() > 1e-10) {
    throw Error(ErrorCode::InvalidArgument, "eigenvectors are not orthonormal");
  }
  if (h_prime.rows() != n || h_prime.cols() != n) {
    throw Error(ErrorCode::InvalidArgument, "H' dimension does not match H0");
  }
  if ((h_prime - h_prime.adjoint()).norm() > 1e-12 * std::max(1.0, h_prime.norm())) {
    throw Error(ErrorCode::NonHermitian, "H' must be Hermitian");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be finite and non-negative");
  }
  if (initial_index < 0 || initial_index >= n) {
    throw Error(ErrorCode::InvalidArgument, "initial_index out of range");
  }
}

Complex PerturbationProblem::matrix_element(Eigen::Index m, Eigen::Index k) const {
  return eigen.vectors.col(m).dot(h_prime * eigen.vectors.col(k));
}

// ---------------------------------------------------------------------------
// s-domain orders

VecXc SDomainState::evaluate(const EigenSystem& eigen, Complex s) const {
  VecXc out = VecXc::Zero(eigen.dimension());
  for (Eigen::Index m = 0; m < eigen.dimension(); ++m) {
    const auto& c = coefficients[static_cast<std::size_t>(m)];
    if (!c.is_zero()) out += c(s) * eigen.vectors.col(m);
  }
  return out;
}

VecXc SDomainState::inverse(const EigenSystem& eigen, double t) const {
  VecXc out = VecXc::Zero(eigen.dimension());
  for (Eigen::Index m = 0; m < eigen.dimension(); ++m) {
    const auto& c = coefficients[static_cast<std::size_t>(m)];
    if (!c.is_zero()) out += c.inverse_laplace(t) * eigen.vectors.col(m);
  }
  return out;
}

SDomainState zeroth_order(const PerturbationProblem& problem) {
  problem.validate();
  const Eigen::Index k = problem.initial_index;
  SDomainState out{0, {}};
  for (Eigen::Index m = 0; m < problem.eigen.dimension(); ++m) {
    if (m == k) {
      out.coefficients.emplace_back(ComplexPolynomial({kIHbar}), kIHbar,
                                    std::vector<Pole>{{pole_of(problem.eigen.energies[k]), 1}});
    } else {
      out.coefficients.emplace_back();
    }
  }
  return out;
}

SDomainState first_order_coefficients(const PerturbationProblem& problem) {
  problem.validate();
  const Eigen::Index k = problem.initial_index;
  const double e_k = problem.eigen.energies[k];
  SDomainState out{1, {}};
  for (Eigen::Index m = 0; m < problem.eigen.dimension(); ++m) {
    const Complex element = problem.matrix_element(m, k);
    std::vector<Pole> poles{{pole_of(problem.eigen.energies[m]), 1}, {pole_of(e_k), 1}};
    std::vector<Complex> num;
    if (element != Complex{}) num.push_back(kIHbar * element);
    out.coefficients.emplace_back(ComplexPolynomial(std::move(num)), kIHbar * kIHbar,
                                  std::move(poles));
  }
  return out;
}

VecXc hierarchy_residual(const PerturbationProblem& problem, const VecXc& psi_n,
                         const VecXc* psi_previous, int order, Complex s) {
  const Eigen::Index n = problem.eigen.dimension();
  const MatXc shifted = problem.eigen.hamiltonian() - kIHbar * s * MatXc::Identity(n, n);
  VecXc r = shifted * psi_n;
  if (order == 0) {
    r += kIHbar * problem.eigen.vectors.col(problem.initial_index);
  } else {
    if (psi_previous == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "order > 0 needs the previous order");
    }
    r += problem.h_prime * *psi_previous;
  }
  return r;
}

VecXc second_order_at(const PerturbationProblem& problem, Complex s) {
  const Eigen::Index n = problem.eigen.dimension();
  const VecXc psi1 = first_order_coefficients(problem).evaluate(problem.eigen, s);
  const MatXc shifted = problem.eigen.hamiltonian() - kIHbar * s * MatXc::Identity(n, n);
  return shifted.partialPivLu().solve(-(problem.h_prime * psi1));
}

// ---------------------------------------------------------------------------
// time domain

FirstOrderState first_order_time_state(const PerturbationProblem& problem, double t) {
  problem.validate();
  const Eigen::Index k = problem.initial_index;
  const auto& e = problem.eigen.energies;
  const double tol = 1e-9 * std::max(spectrum_scale(e), std::numeric_limits<double>::min());
  for (Eigen::Index m = 0; m < e.size(); ++m) {
    if (m != k && std::abs(e[m] - e[k]) <= tol) {
      throw Error(ErrorCode::DegenerateSpectrum,
                  "E_" + std::to_string(m) + " coincides with the initial level");
    }
  }
  const double lambda = problem.lambda;
  const Complex phase_k = std::exp(-kI * (e[k] * t / kHbar));
  VecXc psi = (1.0 - kI * (lambda * t / kHbar) * problem.matrix_element(k, k)) * phase_k *
              problem.eigen.vectors.col(k);
  for (Eigen::Index m = 0; m < e.size(); ++m) {
    if (m == k) continue;
    const Complex element = problem.matrix_element(m, k);
    if (element == Complex{}) continue;
    const Complex phase_m = std::exp(-kI * (e[m] * t / kHbar));
    psi += (lambda * element / (e[k] - e[m])) * (phase_k - phase_m) * problem.eigen.vectors.col(m);
  }
  return {psi, std::abs(psi.norm() - 1.0)};
}

VecXc exact_evolution(const MatXc& h, const VecXc& psi0, double t) {
  Eigen::SelfAdjointEigenSolver<MatXc> eig(h);
  const VecXc phases =
      (-kI * (eig.eigenvalues().cast<Complex>() * (t / kHbar))).array().exp().matrix();
  return eig.eigenvectors() * (phases.asDiagonal() * (eig.eigenvectors().adjoint() * psi0));
}

double fitted_exponent(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

SweepRow evaluate_lambda(const PerturbationProblem& base, double lambda,
                         std::span<const double> t_grid) {
  PerturbationProblem p = base;
  p.lambda = lambda;
  const MatXc h = p.full_hamiltonian();
  const VecXc psi0 = p.eigen.vectors.col(p.initial_index);
  SweepRow row{lambda, 0.0, 0.0};
  for (double t : t_grid) {
    const FirstOrderState approx = first_order_time_state(p, t);
    const VecXc exact = exact_evolution(h, psi0, t);
    row.max_error = std::max(row.max_error, (approx.state - exact).norm());
    row.max_norm_defect = std::max(row.max_norm_defect, approx.norm_defect);
  }
  return row;
}

}  // namespace

ValidationReport validate_against_ode(const PerturbationProblem& problem,
                                      std::span<const double> t_grid,
                                      std::span<const double> lambdas) {
  ValidationReport report;
  try {
    if (t_grid.empty()) throw Error(ErrorCode::InvalidArgument, "time grid is empty");
    problem.validate();
    report.max_error = evaluate_lambda(problem, problem.lambda, t_grid).max_error;
    std::vector<double> ls, errs, defects;
    for (double lambda : lambdas) {
      report.sweep.push_back(evaluate_lambda(problem, lambda, t_grid));
      ls.push_back(lambda);
      errs.push_back(report.sweep.back().max_error);
      defects.push_back(report.sweep.back().max_norm_defect);
    }
    report.error_exponent = fitted_exponent(ls, errs);
    report.norm_defect_exponent = fitted_exponent(ls, defects);
  } catch (const Error& e) {
    report.error = e.what();
  }
  return report;
}

}  // namespace qauto::perturbation
