#include "qauto/control_loop.hpp"

#include "qauto/error.hpp"

#include <algorithm>
#include <cmath>

namespace qauto::control {

namespace {
constexpr double kCoefficientLimit = 1e300;
}

Polynomial::Polynomial(std::initializer_list<double> coefficients) : c_(coefficients) {
  trim_and_guard();
}

Polynomial::Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) {
  trim_and_guard();
}

void Polynomial::trim_and_guard() {
  for (double v : c_) {
    if (!std::isfinite(v) || std::abs(v) > kCoefficientLimit) {
      throw Error(ErrorCode::CoefficientOverflow, "polynomial coefficient out of range");
    }
  }
  while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

Polynomial Polynomial::monomial(int k, double c) {
  std::vector<double> v(static_cast<std::size_t>(k) + 1, 0.0);
  v.back() = c;
  return Polynomial(std::move(v));
}

double Polynomial::operator()(double s) const {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double Polynomial::coefficient(int k) const {
  return k >= 0 && k < static_cast<int>(c_.size()) ? c_[static_cast<std::size_t>(k)] : 0.0;
}

int Polynomial::origin_multiplicity() const {
  int k = 0;
  while (k < static_cast<int>(c_.size()) && c_[static_cast<std::size_t>(k)] == 0.0) ++k;
  return k;
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
  std::vector<double> out(std::max(c_.size(), rhs.c_.size()), 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) out[i] += c_[i];
  for (std::size_t i = 0; i < rhs.c_.size(); ++i) out[i] += rhs.c_[i];
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
  if (is_zero() || rhs.is_zero()) return {};
  std::vector<double> out(c_.size() + rhs.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) {
    for (std::size_t j = 0; j < rhs.c_.size(); ++j) out[i + j] += c_[i] * rhs.c_[j];
  }
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator*(double k) const {
  std::vector<double> out = c_;
  for (double& v : out) v *= k;
  return Polynomial(std::move(out));
}

RationalTF::RationalTF(Polynomial numerator, Polynomial denominator) {
  if (denominator.is_zero()) {
    throw Error(ErrorCode::ZeroDenominator, "transfer function denominator is zero");
  }
  const double lead = denominator.coefficients().back();
  if (lead == 1.0) {
    num_ = std::move(numerator);
    den_ = std::move(denominator);
  } else {
    num_ = numerator * (1.0 / lead);
    den_ = denominator * (1.0 / lead);
  }
}

RationalTF tf_arith(const RationalTF& a, const RationalTF& b, TfOp op) {
  if (op == TfOp::Mul) {
    return RationalTF(a.numerator() * b.numerator(), a.denominator() * b.denominator());
  }
  return RationalTF(a.numerator() * b.denominator() + b.numerator() * a.denominator(),
                    a.denominator() * b.denominator());
}

RationalTF closed_loop(const RationalTF& c, const RationalTF& act, const RationalTF& dyn,
                       const RationalTF& h) {
  const RationalTF g = tf_arith(tf_arith(c, act, TfOp::Mul), dyn, TfOp::Mul);
  const Polynomial num = g.numerator() * h.denominator();
  const Polynomial den = g.denominator() * h.denominator() + g.numerator() * h.numerator();
  if (den.is_zero()) {
    throw Error(ErrorCode::DegenerateLoop, "1 + c act dyn h vanishes identically");
  }
  return RationalTF(num, den);
}

RationalTF cancel_origin_factors(const RationalTF& tf) {
  if (tf.numerator().is_zero()) return RationalTF::zero();
  const int k = std::min(tf.numerator().origin_multiplicity(),
                         tf.denominator().origin_multiplicity());
  if (k == 0) return tf;
  const auto shift = [k](const Polynomial& p) {
    const auto& c = p.coefficients();
    return Polynomial(std::vector<double>(c.begin() + k, c.end()));
  };
  return RationalTF(shift(tf.numerator()), shift(tf.denominator()));
}

std::optional<double> dc_gain(const RationalTF& tf) {
  const RationalTF r = cancel_origin_factors(tf);
  const double d0 = r.denominator().coefficient(0);
  if (d0 == 0.0) return std::nullopt;
  return r.numerator().coefficient(0) / d0;
}

std::vector<std::complex<double>> poles(const RationalTF& tf) {
  const int n = tf.denominator().degree();
  if (n <= 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) companion(i, i + 1) = 1.0;
  for (int j = 0; j < n; ++j) companion(n - 1, j) = -tf.denominator().coefficient(j);
  const Eigen::VectorXcd ev = companion.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

bool is_stable(const RationalTF& tf, double tol) {
  const auto p = poles(tf);
  return std::all_of(p.begin(), p.end(), [tol](const auto& z) { return z.real() <= tol; });
}

StateSpace StateSpace::from_tf(const RationalTF& tf) {
  if (!tf.is_proper()) {
    throw Error(ErrorCode::ImproperTF, "numerator degree exceeds denominator degree");
  }
  const int n = tf.denominator().degree();
  StateSpace ss;
  ss.d = tf.numerator().coefficient(n);
  ss.a = Eigen::MatrixXd::Zero(n, n);
  ss.b = Eigen::VectorXd::Zero(n);
  ss.c = Eigen::RowVectorXd::Zero(n);
  if (n == 0) return ss;
  for (int i = 0; i + 1 < n; ++i) ss.a(i, i + 1) = 1.0;
  for (int j = 0; j < n; ++j) {
    ss.a(n - 1, j) = -tf.denominator().coefficient(j);
    // strictly proper remainder num - d * den
    ss.c(j) = tf.numerator().coefficient(j) - ss.d * tf.denominator().coefficient(j);
  }
  ss.b(n - 1) = 1.0;
  return ss;
}

Eigen::VectorXd StateSpace::step(const Eigen::VectorXd& x, double u, double dt) const {
  if (order() == 0) return x;
  const auto f = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd { return a * s + b * u; };
  const Eigen::VectorXd k1 = f(x);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

long long tick_count(double duration, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt) || !(duration >= 0.0) || !std::isfinite(duration)) {
    throw Error(ErrorCode::InvalidArgument, "need dt > 0 and finite duration >= 0");
  }
  return std::llround(duration / dt);
}

}  // namespace

std::vector<StepSample> step_response(const RationalTF& tf, double duration, double dt) {
  const StateSpace ss = StateSpace::from_tf(tf);
  const long long steps = tick_count(duration, dt);
  std::vector<StepSample> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(ss.order());
  for (long long k = 0; k <= steps; ++k) {
    out.push_back({static_cast<double>(k) * dt, ss.output(x, 1.0)});
    if (k < steps) x = ss.step(x, 1.0, dt);
  }
  return out;
}

std::string_view to_string(QuantumGate gate) {
  switch (gate) {
    case QuantumGate::None: return "none";
    case QuantumGate::KeyProtected: return "key_protected";
    case QuantumGate::EntanglementTriggered: return "entanglement_triggered";
  }
  return "?";
}

std::string_view to_string(GateAction action) {
  switch (action) {
    case GateAction::Released: return "released";
    case GateAction::Held: return "held";
    case GateAction::Deferred: return "deferred";
  }
  return "?";
}

RationalTF LoopConfig::closed() const {
  const RationalTF c = tf_arith(RationalTF::gain(controller_gain_scale), controller, TfOp::Mul);
  return closed_loop(c, actuator, plant, sensor);
}

std::vector<std::uint8_t> seal_setpoint(std::uint16_t sequence, double setpoint,
                                        bb84::OneTimePad& sender_pad) {
  const double v[] = {setpoint};
  return bb84::seal_command(sequence, bb84::encode_doubles(v), sender_pad);
}

LoopLog quantum_gated_run(const LoopConfig& loop, std::span<const Command> commands,
                          const GateInputs& inputs, double duration, double dt) {
  for (std::size_t i = 1; i < commands.size(); ++i) {
    if (commands[i].time < commands[i - 1].time) {
      throw Error(ErrorCode::InvalidArgument, "command schedule must be time-sorted");
    }
  }
  for (std::size_t i = 1; i < inputs.triggers.size(); ++i) {
    if (inputs.triggers[i].start < inputs.triggers[i - 1].start) {
      throw Error(ErrorCode::InvalidArgument, "trigger stream must be time-sorted");
    }
  }
  if (loop.gate == QuantumGate::KeyProtected && inputs.receiver_pad == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "key-protected loop needs a receiver pad");
  }

  LoopLog log;
  log.closed_loop = loop.closed();
  const StateSpace ss = StateSpace::from_tf(log.closed_loop);
  const long long steps = tick_count(duration, dt);
  const double eps = 1e-9 * dt;

  const auto trigger_active = [&](double t) {
    return std::any_of(inputs.triggers.begin(), inputs.triggers.end(), [&](const auto& w) {
      return t >= w.start - eps && t < w.end - eps;
    });
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(ss.order());
  double setpoint = 0.0;
  std::size_t next = 0;
  std::vector<std::size_t> deferred;
  log.samples.reserve(static_cast<std::size_t>(steps) + 1);

  for (long long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    bool released = false;
    const auto release = [&](std::size_t i, double value, std::string reason) {
      setpoint = value;
      released = true;
      log.decisions.push_back({t, i, GateAction::Released, std::move(reason)});
    };

    if (!deferred.empty() && trigger_active(t)) {
      for (std::size_t i : deferred) release(i, commands[i].setpoint, "trigger asserted");
      deferred.clear();
    }

    while (next < commands.size() && commands[next].time <= t + eps) {
      const Command& cmd = commands[next];
      switch (loop.gate) {
        case QuantumGate::None:
          release(next, cmd.setpoint, "ungated");
          break;
        case QuantumGate::KeyProtected: {
          const auto payload = bb84::open_command(cmd.frame, *inputs.receiver_pad, cmd.sequence);
          const auto values = payload ? bb84::decode_doubles(*payload) : std::nullopt;
          if (values && values->size() == 1 && std::isfinite(values->front())) {
            release(next, values->front(), "authenticated");
          } else {
            log.decisions.push_back({t, next, GateAction::Held, "frame failed to authenticate"});
          }
          break;
        }
        case QuantumGate::EntanglementTriggered:
          if (trigger_active(t)) {
            release(next, cmd.setpoint, "trigger asserted");
          } else {
            deferred.push_back(next);
            log.decisions.push_back({t, next, GateAction::Deferred, "no trigger"});
          }
          break;
      }
      ++next;
    }

    log.samples.push_back({t, setpoint, released, ss.output(x, setpoint)});
    if (k < steps) x = ss.step(x, setpoint, dt);
  }
  return log;
}

}  // namespace qauto::control
