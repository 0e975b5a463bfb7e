#pragma once

// Rational transfer functions, closed-loop composition and a discrete-time
// loop whose setpoint commands can be gated by quantum-derived key material
// or an entanglement trigger.

#include "qauto/bb84.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qauto::control {

/// Real polynomial in s, ascending powers, trailing zeros trimmed.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(std::initializer_list<double> coefficients);
  explicit Polynomial(std::vector<double> coefficients);

  static Polynomial constant(double c) { return Polynomial({c}); }
  /// s^k
  static Polynomial monomial(int k, double c = 1.0);

  double operator()(double s) const;
  Polynomial operator+(const Polynomial& rhs) const;
  Polynomial operator*(const Polynomial& rhs) const;
  Polynomial operator*(double k) const;
  bool operator==(const Polynomial& rhs) const = default;

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  double coefficient(int k) const;
  const std::vector<double>& coefficients() const { return c_; }
  /// Number of leading zero coefficients (power of s dividing the polynomial).
  int origin_multiplicity() const;

 private:
  void trim_and_guard();
  std::vector<double> c_;
};

/// num(s) / den(s) with den monic.
class RationalTF {
 public:
  RationalTF() : RationalTF(Polynomial{1.0}, Polynomial{1.0}) {}
  /// Throws ZeroDenominator.
  RationalTF(Polynomial numerator, Polynomial denominator);

  static RationalTF gain(double k) { return RationalTF(Polynomial{k}, Polynomial{1.0}); }
  static RationalTF zero() { return RationalTF(Polynomial{}, Polynomial{1.0}); }

  const Polynomial& numerator() const { return num_; }
  const Polynomial& denominator() const { return den_; }
  double operator()(double s) const { return num_(s) / den_(s); }
  bool is_proper() const { return num_.degree() <= den_.degree(); }
  bool operator==(const RationalTF& rhs) const = default;

 private:
  Polynomial num_;
  Polynomial den_;
};

enum class TfOp { Add, Mul };

RationalTF tf_arith(const RationalTF& a, const RationalTF& b, TfOp op);

/// (c act dyn) / (1 + c act dyn h), without cancellation. Throws
/// DegenerateLoop when 1 + c act dyn h vanishes identically.
RationalTF closed_loop(const RationalTF& c, const RationalTF& act, const RationalTF& dyn,
                       const RationalTF& h);

/// Divides out the common s^k factor of numerator and denominator.
RationalTF cancel_origin_factors(const RationalTF& tf);

/// lim_{s->0} tf(s) after origin cancellation; nullopt for a pole at 0.
std::optional<double> dc_gain(const RationalTF& tf);

/// Roots of the denominator (companion-matrix eigenvalues).
std::vector<std::complex<double>> poles(const RationalTF& tf);

/// True when every pole has real part <= tol.
bool is_stable(const RationalTF& tf, double tol = 1e-9);

/// Controllable canonical realization x' = A x + B u, y = C x + D u.
struct StateSpace {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::RowVectorXd c;
  double d = 0.0;

  /// Throws ImproperTF.
  static StateSpace from_tf(const RationalTF& tf);
  Eigen::Index order() const { return a.rows(); }
  double output(const Eigen::VectorXd& x, double u) const { return c.dot(x) + d * u; }
  /// One RK4 step with u held constant.
  Eigen::VectorXd step(const Eigen::VectorXd& x, double u, double dt) const;
};

struct StepSample {
  double t = 0.0;
  double y = 0.0;
};

/// Unit-step response sampled at t = k dt, k = 0..round(duration/dt).
std::vector<StepSample> step_response(const RationalTF& tf, double duration, double dt);

enum class QuantumGate { None, KeyProtected, EntanglementTriggered };
std::string_view to_string(QuantumGate gate);

struct LoopConfig {
  RationalTF controller = RationalTF::gain(1.0);
  RationalTF actuator = RationalTF::gain(1.0);
  RationalTF plant = RationalTF::gain(1.0);
  RationalTF sensor = RationalTF::gain(1.0);
  QuantumGate gate = QuantumGate::None;
  /// Scales the controller; the quantum dependence of the loop is frozen
  /// into this number per scenario.
  double controller_gain_scale = 1.0;

  RationalTF closed() const;
};

/// A setpoint change scheduled at `time`. For key-protected runs `frame`
/// carries the sealed command (sequence, encoded setpoint).
struct Command {
  double time = 0.0;
  double setpoint = 0.0;
  std::vector<std::uint8_t> frame;
  std::uint16_t sequence = 0;
};

struct TriggerInterval {
  double start = 0.0;
  double end = 0.0;  // exclusive
};

struct GateInputs {
  bb84::OneTimePad* receiver_pad = nullptr;  // key_protected
  std::vector<TriggerInterval> triggers;      // entanglement_triggered
};

enum class GateAction { Released, Held, Deferred };
std::string_view to_string(GateAction action);

struct GateDecision {
  double time = 0.0;
  std::size_t command = 0;
  GateAction action = GateAction::Released;
  std::string reason;
};

struct LoopSample {
  double t = 0.0;
  double setpoint = 0.0;
  bool released = false;  // a command was released at this tick
  double output = 0.0;
};

struct LoopLog {
  RationalTF closed_loop;
  std::vector<LoopSample> samples;
  std::vector<GateDecision> decisions;
};

/// Sealed frame carrying one setpoint.
std::vector<std::uint8_t> seal_setpoint(std::uint16_t sequence, double setpoint,
                                        bb84::OneTimePad& sender_pad);

/// Simulates the closed loop with a piecewise-constant setpoint starting at
/// 0. Commands must be sorted by time. Ticks are t = k dt; at each tick due
/// commands are gated, the sample is recorded, then the state advances.
/// KeyExhausted from the pad propagates.
LoopLog quantum_gated_run(const LoopConfig& loop, std::span<const Command> commands,
                          const GateInputs& inputs, double duration, double dt);

}  // namespace qauto::control
