#pragma once

// Six-degree-of-freedom platform dynamics in the body frame with
// yaw-pitch-roll (Z-Y-X) Euler-angle kinematics.

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace qauto::rigid_body {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pitch magnitude at which Euler-rate conversion is refused.
inline constexpr double kGimbalMargin = 1e-6;

struct EulerAngles {
  double roll = 0.0;   // theta_x about body x
  double pitch = 0.0;  // theta_y about intermediate y
  double yaw = 0.0;    // theta_z about inertial z

  Vec3 as_vector() const { return {roll, pitch, yaw}; }
  static EulerAngles from_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

struct BodyState {
  Vec3 position = Vec3::Zero();  // r_I, inertial frame [m]
  EulerAngles attitude;
  Vec3 velocity = Vec3::Zero();  // v_B = (u, v, w), body frame [m/s]
  Vec3 rate = Vec3::Zero();      // omega_B = (p, q, r), body frame [rad/s]

  bool is_finite() const;
};

/// Principal-axis inertia.
struct InertiaMatrix {
  double ixx = 1.0;
  double iyy = 1.0;
  double izz = 1.0;

  Mat3 matrix() const { return Vec3(ixx, iyy, izz).asDiagonal(); }
  /// Throws SingularInertia unless all moments are positive and satisfy the
  /// triangle inequalities.
  void validate() const;
};

/// Forces and moments in the body frame, kept as drag + propulsion parts.
struct Wrench {
  Vec3 force_drag = Vec3::Zero();
  Vec3 force_propulsion = Vec3::Zero();
  Vec3 moment_drag = Vec3::Zero();
  Vec3 moment_propulsion = Vec3::Zero();

  Vec3 force() const { return force_drag + force_propulsion; }
  Vec3 moment() const { return moment_drag + moment_propulsion; }

  static Wrench zero() { return {}; }
};

/// Piecewise-linear mass m(t), held constant outside the knot range.
class MassSchedule {
 public:
  MassSchedule(double constant_mass = 1.0);  // NOLINT(google-explicit-constructor)
  /// Knots (time, mass) sorted by strictly increasing time.
  explicit MassSchedule(std::vector<std::pair<double, double>> knots);

  double at(double t) const;

 private:
  std::vector<std::pair<double, double>> knots_;
};

struct PlatformParams {
  MassSchedule mass{1.0};
  InertiaMatrix inertia;
  Vec3 gravity = Vec3::Zero();  // g_I, inertial frame [m/s^2]
};

/// Cross-product matrix: skew(w) * v == w.cross(v).
Mat3 skew(const Vec3& w);

/// Single-axis passive rotations making up the yaw-pitch-roll sequence.
Mat3 yaw_matrix(double yaw);
Mat3 pitch_matrix(double pitch);
Mat3 roll_matrix(double roll);

/// H_I^B = roll(theta_x) * pitch(theta_y) * yaw(theta_z): takes inertial
/// components to body components. Its transpose is H_B^I.
Mat3 rotation_inertial_to_body(const EulerAngles& angles);
Mat3 rotation_body_to_inertial(const EulerAngles& angles);

/// Z-Y-X angles of a proper rotation matrix H_I^B. Throws GimbalLock when
/// the extracted pitch is within kGimbalMargin of +-pi/2.
EulerAngles euler_from_rotation(const Mat3& inertial_to_body);

/// The L_I^B matrix mapping Euler-angle rates to body rates.
Mat3 euler_rate_matrix(const EulerAngles& angles);

/// omega_B = L_I^B * Theta_dot.
Vec3 body_rates_from_euler_rates(const EulerAngles& angles, const Vec3& euler_rates);

/// Theta_dot = (L_I^B)^-1 * omega_B. Throws GimbalLock for
/// |pitch| >= pi/2 - kGimbalMargin.
Vec3 euler_rates_from_body_rates(const EulerAngles& angles, const Vec3& omega_body);

/// v_dot_B = F_B / m + H_I^B g_I - skew(omega_B) v_B. Throws NonPositiveMass.
Vec3 translational_accel(const BodyState& state, const Wrench& wrench,
                         const PlatformParams& params, double t = 0.0);

/// omega_dot_B = I^-1 (M_B - skew(omega_B) I omega_B). Throws SingularInertia.
Vec3 angular_accel(const BodyState& state, const Wrench& wrench,
                   const PlatformParams& params);

/// Time derivative of the full 12-component state.
struct StateDerivative {
  Vec3 position_rate;
  Vec3 euler_rates;
  Vec3 velocity_rate;
  Vec3 rate_rate;
};
StateDerivative derivative(const BodyState& state, const Wrench& wrench,
                           const PlatformParams& params, double t = 0.0);

/// One classical RK4 step of length dt starting at time t. The wrench is
/// held constant across the step. Throws GimbalLock, NonFinite,
/// InvalidArgument (dt <= 0).
BodyState step(const BodyState& state, const Wrench& wrench,
               const PlatformParams& params, double dt, double t = 0.0);

/// 0.5 * omega^T I omega.
double rotational_energy(const BodyState& state, const InertiaMatrix& inertia);

/// H_B^I (I omega_B): angular momentum expressed in the inertial frame.
Vec3 inertial_angular_momentum(const BodyState& state, const InertiaMatrix& inertia);

}  // namespace qauto::rigid_body
