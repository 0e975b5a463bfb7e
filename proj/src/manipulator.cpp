#include "qauto/manipulator.hpp"

#include "qauto/error.hpp"

#include <cmath>

namespace qauto::manipulator {

HomTransform::HomTransform(const Eigen::Matrix4d& m) : m_(m) {
  const Mat3 r = rotation();
  if (!m_.allFinite() || (r.transpose() * r - Mat3::Identity()).norm() > 1e-9 ||
      std::abs(r.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "rotation block is not a proper rotation");
  }
  if (m_(3, 0) != 0.0 || m_(3, 1) != 0.0 || m_(3, 2) != 0.0 || m_(3, 3) != 1.0) {
    throw Error(ErrorCode::InvalidArgument, "bottom row must be 0 0 0 1");
  }
}

HomTransform::HomTransform(const Mat3& rotation, const Vec3& translation)
    : m_(Eigen::Matrix4d::Identity()) {
  m_.topLeftCorner<3, 3>() = rotation;
  m_.topRightCorner<3, 1>() = translation;
}

HomTransform HomTransform::rotation_z(double angle) {
  return {Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero()};
}

HomTransform HomTransform::operator*(const HomTransform& rhs) const {
  HomTransform out;
  out.m_ = m_ * rhs.m_;
  out.m_.row(3) << 0.0, 0.0, 0.0, 1.0;
  return out;
}

HomTransform compose_chain(std::span<const HomTransform> links) {
  if (links.empty()) throw Error(ErrorCode::EmptyChain, "transform chain is empty");
  HomTransform acc = links.front();
  for (auto it = links.begin() + 1; it != links.end(); ++it) acc = acc * *it;
  return acc;
}

HomTransform base_transform(const rigid_body::BodyState& base) {
  return {rigid_body::rotation_body_to_inertial(base.attitude), base.position};
}

HomTransform pose_transform(const EndEffectorPose& pose) {
  return {rigid_body::rotation_body_to_inertial(pose.orientation), pose.position};
}

EndEffectorPose end_effector_inertial(const EndEffectorPose& pose, const rigid_body::BodyState& base,
                                      PoseMode mode) {
  if (mode == PoseMode::Paper) {
    return {pose.position + base.position,
            rigid_body::EulerAngles::from_vector(pose.orientation.as_vector() +
                                                 base.attitude.as_vector())};
  }
  const Vec3 base_angles = base.attitude.as_vector();
  if (base_angles.isZero(0.0)) {
    // identity attitude: skip the extraction round trip
    return {base.position + pose.position, pose.orientation};
  }
  // H_I^E = H_B^E * H_I^B
  const Mat3 inertial_to_effector = rigid_body::rotation_inertial_to_body(pose.orientation) *
                                    rigid_body::rotation_inertial_to_body(base.attitude);
  return {base.position + rigid_body::rotation_body_to_inertial(base.attitude) * pose.position,
          rigid_body::euler_from_rotation(inertial_to_effector)};
}

}  // namespace qauto::manipulator
