#pragma once

#include "qauto/rigid_body.hpp"

#include <Eigen/Dense>

#include <span>

namespace qauto::manipulator {

using rigid_body::EulerAngles;
using rigid_body::Mat3;
using rigid_body::Vec3;

/// 4x4 homogeneous transform. The rotation block maps child-frame
/// components to parent-frame components.
class HomTransform {
 public:
  HomTransform() : m_(Eigen::Matrix4d::Identity()) {}
  /// Validates orthonormality (1e-9), det +1 and the exact bottom row.
  explicit HomTransform(const Eigen::Matrix4d& m);
  HomTransform(const Mat3& rotation, const Vec3& translation);

  static HomTransform identity() { return {}; }
  static HomTransform translation(const Vec3& p) { return {Mat3::Identity(), p}; }
  static HomTransform rotation_z(double angle);

  Mat3 rotation() const { return m_.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return m_.topRightCorner<3, 1>(); }
  const Eigen::Matrix4d& matrix() const { return m_; }

  Vec3 apply(const Vec3& point) const { return rotation() * point + translation(); }
  HomTransform operator*(const HomTransform& rhs) const;

 private:
  Eigen::Matrix4d m_;
};

/// Left-to-right product link_0 * link_1 * ... Throws EmptyChain.
HomTransform compose_chain(std::span<const HomTransform> links);

struct EndEffectorPose {
  Vec3 position = Vec3::Zero();
  EulerAngles orientation;
};

enum class PoseMode {
  Paper,     // component-wise addition of base position and angles
  Rigorous,  // rotate by the base attitude, translate, compose rotations
};

/// End-effector pose in the inertial frame from its pose relative to the
/// manipulator base frame (taken as the platform body frame).
EndEffectorPose end_effector_inertial(const EndEffectorPose& pose_in_base,
                                      const rigid_body::BodyState& base,
                                      PoseMode mode = PoseMode::Rigorous);

/// Transform from the platform body frame to the inertial frame.
HomTransform base_transform(const rigid_body::BodyState& base);

/// Transform from the end-effector frame to the base frame.
HomTransform pose_transform(const EndEffectorPose& pose);

}  // namespace qauto::manipulator
