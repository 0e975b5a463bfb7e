#pragma once

// Leader-referenced formation keeping with an adjacency-weighted PID law.
// Node 0 of the network is the reference (leader); nodes 1..n are followers.

#include "qauto/rigid_body.hpp"

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace qauto::formation {

using rigid_body::Vec3;

enum class OffsetMode {
  /// Pairwise target (d_i - d_j) against a common template with d_0 = 0.
  Template,
  /// Literal d_i against every neighbour j.
  Paper,
};

struct PidGains {
  Vec3 kp = Vec3::Zero();
  Vec3 ki = Vec3::Zero();
  Vec3 kd = Vec3::Zero();

  static PidGains uniform(double kp, double ki, double kd) {
    return {Vec3::Constant(kp), Vec3::Constant(ki), Vec3::Constant(kd)};
  }
};

struct AgentNetwork {
  /// (n+1) x (n+1) binary matrix, a(i, j) = 1 when agent i measures agent j.
  Eigen::MatrixXi adjacency;
  /// Desired offset of each follower from the reference (n entries).
  std::vector<Vec3> offsets;
  PidGains gains;
  /// Per-axis clamp on the accumulated error (anti-windup).
  double integrator_limit = std::numeric_limits<double>::infinity();
  /// Optional per-axis force saturation.
  std::optional<Vec3> force_limit;
  OffsetMode offset_mode = OffsetMode::Template;

  std::size_t followers() const { return offsets.size(); }

  /// Throws SchemaError on a non-binary matrix, a self loop, a size
  /// mismatch, or a follower with no directed path to the reference.
  void validate() const;
};

struct FormationError {
  std::vector<Vec3> per_agent;
  double norm = 0.0;
};

/// e_i = (r_i - r_ref) - d_i for each follower. Throws SizeMismatch.
FormationError formation_error(std::span<const Vec3> positions, const Vec3& reference,
                               std::span<const Vec3> offsets);

/// Accumulated pairwise error per follower.
struct PidState {
  std::vector<Vec3> integral;

  static PidState zeros(std::size_t followers) {
    return {std::vector<Vec3>(followers, Vec3::Zero())};
  }
};

/// Inertial-frame force on each follower:
///   F_i = -sum_j a_ij [kp e_ij + kd (v_i - v_j) + ki I_ij]
/// where positions/velocities hold all n+1 nodes (index 0 = reference).
/// The integrator advances by dt after the force is formed; dt = 0 leaves
/// it unchanged. Throws SizeMismatch.
std::vector<Vec3> control_forces(const AgentNetwork& network, std::span<const Vec3> positions,
                                 std::span<const Vec3> velocities, PidState& state,
                                 double dt = 0.0);

struct FormationAgent {
  rigid_body::BodyState state;
  rigid_body::PlatformParams params;
};

struct FormationSimConfig {
  double duration = 30.0;
  double dt = 0.01;
  double tolerance = 1e-3;
  /// Linear drag -c * v_B applied to every agent.
  double drag_coefficient = 0.0;
  /// Time from which each follower's controller acts; empty = all at 0,
  /// +infinity = never.
  std::vector<double> activation_times;
};

struct FormationSample {
  double t = 0.0;
  std::vector<Vec3> positions;  // all n+1 nodes
  double error_norm = 0.0;
};

struct FormationResult {
  std::vector<FormationSample> trajectory;
  double initial_error = 0.0;
  double final_error = 0.0;
  bool converged = false;
};

/// Closes the control law through the rigid-body equations of motion.
/// agents holds n+1 platforms; the leader receives no propulsion.
FormationResult simulate_formation(const AgentNetwork& network,
                                   std::vector<FormationAgent> agents,
                                   const FormationSimConfig& config);

}  // namespace qauto::formation
