#include "qauto/rigid_body.hpp"

#include "qauto/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qauto::rigid_body {

namespace {

void check_gimbal(double pitch) {
  if (!(std::abs(pitch) < std::numbers::pi / 2.0 - kGimbalMargin)) {
    throw Error(ErrorCode::GimbalLock,
                "pitch " + std::to_string(pitch) + " rad is at or beyond the gimbal guard");
  }
}

bool finite3(const Vec3& v) { return v.allFinite(); }

BodyState advance(const BodyState& s, const StateDerivative& d, double h) {
  BodyState out;
  out.position = s.position + h * d.position_rate;
  out.attitude = EulerAngles::from_vector(s.attitude.as_vector() + h * d.euler_rates);
  out.velocity = s.velocity + h * d.velocity_rate;
  out.rate = s.rate + h * d.rate_rate;
  return out;
}

}  // namespace

bool BodyState::is_finite() const {
  return finite3(position) && finite3(attitude.as_vector()) && finite3(velocity) &&
         finite3(rate);
}

void InertiaMatrix::validate() const {
  if (!(ixx > 0.0 && iyy > 0.0 && izz > 0.0) || !std::isfinite(ixx) ||
      !std::isfinite(iyy) || !std::isfinite(izz)) {
    throw Error(ErrorCode::SingularInertia, "principal moments must be positive");
  }
  if (ixx + iyy < izz || iyy + izz < ixx || izz + ixx < iyy) {
    throw Error(ErrorCode::SingularInertia, "principal moments violate the triangle inequality");
  }
}

MassSchedule::MassSchedule(double constant_mass) : knots_{{0.0, constant_mass}} {}

MassSchedule::MassSchedule(std::vector<std::pair<double, double>> knots)
    : knots_(std::move(knots)) {
  if (knots_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "mass schedule needs at least one knot");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].first > knots_[i - 1].first)) {
      throw Error(ErrorCode::InvalidArgument, "mass schedule times must increase strictly");
    }
  }
  for (const auto& [t, m] : knots_) {
    if (!(m > 0.0)) {
      throw Error(ErrorCode::NonPositiveMass, "scheduled mass must be positive");
    }
  }
}

double MassSchedule::at(double t) const {
  if (t <= knots_.front().first) return knots_.front().second;
  if (t >= knots_.back().first) return knots_.back().second;
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), t,
                             [](double v, const auto& k) { return v < k.first; });
  auto lo = hi - 1;
  const double w = (t - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

Mat3 yaw_matrix(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Mat3 m;
  m << c, s, 0.0,
       -s, c, 0.0,
       0.0, 0.0, 1.0;
  return m;
}

Mat3 pitch_matrix(double pitch) {
  const double c = std::cos(pitch), s = std::sin(pitch);
  Mat3 m;
  m << c, 0.0, -s,
       0.0, 1.0, 0.0,
       s, 0.0, c;
  return m;
}

Mat3 roll_matrix(double roll) {
  const double c = std::cos(roll), s = std::sin(roll);
  Mat3 m;
  m << 1.0, 0.0, 0.0,
       0.0, c, s,
       0.0, -s, c;
  return m;
}

Mat3 rotation_inertial_to_body(const EulerAngles& a) {
  return roll_matrix(a.roll) * pitch_matrix(a.pitch) * yaw_matrix(a.yaw);
}

Mat3 rotation_body_to_inertial(const EulerAngles& a) {
  return rotation_inertial_to_body(a).transpose();
}

EulerAngles euler_from_rotation(const Mat3& h) {
  const double sin_pitch = std::clamp(-h(0, 2), -1.0, 1.0);
  const double pitch = std::asin(sin_pitch);
  check_gimbal(pitch);
  return {std::atan2(h(1, 2), h(2, 2)), pitch, std::atan2(h(0, 1), h(0, 0))};
}

Mat3 euler_rate_matrix(const EulerAngles& a) {
  const double cx = std::cos(a.roll), sx = std::sin(a.roll);
  const double cy = std::cos(a.pitch), sy = std::sin(a.pitch);
  Mat3 l;
  l << 1.0, 0.0, -sy,
       0.0, cx, sx * cy,
       0.0, -sx, cx * cy;
  return l;
}

Vec3 body_rates_from_euler_rates(const EulerAngles& angles, const Vec3& euler_rates) {
  return euler_rate_matrix(angles) * euler_rates;
}

Vec3 euler_rates_from_body_rates(const EulerAngles& a, const Vec3& w) {
  check_gimbal(a.pitch);
  const double cx = std::cos(a.roll), sx = std::sin(a.roll);
  const double cy = std::cos(a.pitch), ty = std::tan(a.pitch);
  const double p = w.x(), q = w.y(), r = w.z();
  const double yaw_part = q * sx + r * cx;
  return {p + yaw_part * ty, q * cx - r * sx, yaw_part / cy};
}

Vec3 translational_accel(const BodyState& state, const Wrench& wrench,
                         const PlatformParams& params, double t) {
  const double m = params.mass.at(t);
  if (!(m > 0.0)) throw Error(ErrorCode::NonPositiveMass, "mass must be positive");
  return wrench.force() / m + rotation_inertial_to_body(state.attitude) * params.gravity -
         skew(state.rate) * state.velocity;
}

Vec3 angular_accel(const BodyState& state, const Wrench& wrench, const PlatformParams& params) {
  const InertiaMatrix& in = params.inertia;
  if (!(in.ixx > 0.0 && in.iyy > 0.0 && in.izz > 0.0)) {
    throw Error(ErrorCode::SingularInertia, "principal moments must be positive");
  }
  const Mat3 inertia = in.matrix();
  const Vec3 rhs = wrench.moment() - skew(state.rate) * (inertia * state.rate);
  return {rhs.x() / in.ixx, rhs.y() / in.iyy, rhs.z() / in.izz};
}

StateDerivative derivative(const BodyState& state, const Wrench& wrench,
                           const PlatformParams& params, double t) {
  return {rotation_body_to_inertial(state.attitude) * state.velocity,
          euler_rates_from_body_rates(state.attitude, state.rate),
          translational_accel(state, wrench, params, t), angular_accel(state, wrench, params)};
}

BodyState step(const BodyState& s, const Wrench& wrench, const PlatformParams& params,
               double dt, double t) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "step size must be positive");
  const StateDerivative k1 = derivative(s, wrench, params, t);
  const StateDerivative k2 = derivative(advance(s, k1, dt / 2), wrench, params, t + dt / 2);
  const StateDerivative k3 = derivative(advance(s, k2, dt / 2), wrench, params, t + dt / 2);
  const StateDerivative k4 = derivative(advance(s, k3, dt), wrench, params, t + dt);

  const auto combine = [](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return Vec3((a + 2.0 * b + 2.0 * c + d) / 6.0);
  };
  const StateDerivative mean{
      combine(k1.position_rate, k2.position_rate, k3.position_rate, k4.position_rate),
      combine(k1.euler_rates, k2.euler_rates, k3.euler_rates, k4.euler_rates),
      combine(k1.velocity_rate, k2.velocity_rate, k3.velocity_rate, k4.velocity_rate),
      combine(k1.rate_rate, k2.rate_rate, k3.rate_rate, k4.rate_rate)};
  BodyState next = advance(s, mean, dt);
  if (!next.is_finite()) throw Error(ErrorCode::NonFinite, "state diverged during RK4 step");
  check_gimbal(next.attitude.pitch);
  return next;
}

double rotational_energy(const BodyState& state, const InertiaMatrix& inertia) {
  return 0.5 * state.rate.dot(inertia.matrix() * state.rate);
}

Vec3 inertial_angular_momentum(const BodyState& state, const InertiaMatrix& inertia) {
  return rotation_body_to_inertial(state.attitude) * (inertia.matrix() * state.rate);
}

}  // namespace qauto::rigid_body
