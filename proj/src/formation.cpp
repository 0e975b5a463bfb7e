#include "qauto/formation.hpp"

#include "qauto/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace qauto::formation {

void AgentNetwork::validate() const {
  const auto n = static_cast<Eigen::Index>(offsets.size());
  if (adjacency.rows() != n + 1 || adjacency.cols() != n + 1) {
    throw Error(ErrorCode::SchemaError, "adjacency must be (followers+1) square");
  }
  for (Eigen::Index i = 0; i <= n; ++i) {
    for (Eigen::Index j = 0; j <= n; ++j) {
      const int a = adjacency(i, j);
      if (a != 0 && a != 1) throw Error(ErrorCode::SchemaError, "adjacency entries must be 0 or 1");
      if (i == j && a != 0) throw Error(ErrorCode::SchemaError, "adjacency diagonal must be zero");
    }
  }
  // every follower needs a directed path i -> ... -> 0
  std::vector<bool> reaches(static_cast<std::size_t>(n + 1), false);
  reaches[0] = true;
  std::deque<Eigen::Index> frontier{0};
  while (!frontier.empty()) {
    const Eigen::Index j = frontier.front();
    frontier.pop_front();
    for (Eigen::Index i = 1; i <= n; ++i) {
      if (!reaches[static_cast<std::size_t>(i)] && adjacency(i, j) == 1) {
        reaches[static_cast<std::size_t>(i)] = true;
        frontier.push_back(i);
      }
    }
  }
  for (Eigen::Index i = 1; i <= n; ++i) {
    if (!reaches[static_cast<std::size_t>(i)]) {
      throw Error(ErrorCode::SchemaError,
                  "follower " + std::to_string(i) + " is not connected to the reference");
    }
  }
  if (!(integrator_limit >= 0.0)) {
    throw Error(ErrorCode::SchemaError, "integrator_limit must be non-negative");
  }
}

FormationError formation_error(std::span<const Vec3> positions, const Vec3& reference,
                               std::span<const Vec3> offsets) {
  if (positions.size() != offsets.size()) {
    throw Error(ErrorCode::SizeMismatch, "positions and offsets differ in length");
  }
  FormationError out;
  out.per_agent.reserve(positions.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    Vec3 e = (positions[i] - reference) - offsets[i];
    sq += e.squaredNorm();
    out.per_agent.push_back(e);
  }
  out.norm = std::sqrt(sq);
  return out;
}

std::vector<Vec3> control_forces(const AgentNetwork& network, std::span<const Vec3> positions,
                                 std::span<const Vec3> velocities, PidState& state, double dt) {
  const std::size_t n = network.followers();
  if (positions.size() != n + 1 || velocities.size() != n + 1 || state.integral.size() != n ||
      static_cast<std::size_t>(network.adjacency.rows()) != n + 1) {
    throw Error(ErrorCode::SizeMismatch, "control inputs do not match the network size");
  }
  const auto offset = [&](std::size_t node) -> Vec3 {
    return node == 0 ? Vec3::Zero() : network.offsets[node - 1];
  };
  const PidGains& g = network.gains;

  std::vector<Vec3> forces(n, Vec3::Zero());
  for (std::size_t i = 1; i <= n; ++i) {
    Vec3 err_sum = Vec3::Zero();
    Vec3 rate_sum = Vec3::Zero();
    for (std::size_t j = 0; j <= n; ++j) {
      if (network.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 0) {
        continue;
      }
      const Vec3 target = network.offset_mode == OffsetMode::Template ? Vec3(offset(i) - offset(j))
                                                                       : offset(i);
      err_sum += (positions[i] - positions[j]) - target;
      rate_sum += velocities[i] - velocities[j];
    }
    Vec3& integral = state.integral[i - 1];
    Vec3 f = -(g.kp.cwiseProduct(err_sum) + g.kd.cwiseProduct(rate_sum) +
               g.ki.cwiseProduct(integral));
    if (network.force_limit) {
      const Vec3& lim = *network.force_limit;
      for (int k = 0; k < 3; ++k) f[k] = std::clamp(f[k], -lim[k], lim[k]);
    }
    forces[i - 1] = f;
    if (dt > 0.0) {
      integral += dt * err_sum;
      const double lim = network.integrator_limit;
      for (int k = 0; k < 3; ++k) integral[k] = std::clamp(integral[k], -lim, lim);
    }
  }
  return forces;
}

namespace {

FormationSample sample(double t, const std::vector<FormationAgent>& agents,
                       const AgentNetwork& network) {
  FormationSample s;
  s.t = t;
  s.positions.reserve(agents.size());
  for (const auto& a : agents) s.positions.push_back(a.state.position);
  const std::span<const Vec3> all(s.positions);
  s.error_norm = formation_error(all.subspan(1), s.positions.front(), network.offsets).norm;
  return s;
}

}  // namespace

FormationResult simulate_formation(const AgentNetwork& network, std::vector<FormationAgent> agents,
                                   const FormationSimConfig& config) {
  network.validate();
  const std::size_t n = network.followers();
  if (agents.size() != n + 1) {
    throw Error(ErrorCode::SizeMismatch, "need one platform per node including the reference");
  }
  if (!(config.dt > 0.0) || !(config.duration > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "duration and dt must be positive");
  }
  if (!config.activation_times.empty() && config.activation_times.size() != n) {
    throw Error(ErrorCode::SizeMismatch, "activation_times needs one entry per follower");
  }

  const auto steps = static_cast<std::size_t>(std::llround(config.duration / config.dt));
  PidState pid = PidState::zeros(n);
  FormationResult result;
  result.trajectory.reserve(steps + 1);
  result.trajectory.push_back(sample(0.0, agents, network));
  result.initial_error = result.trajectory.front().error_norm;

  std::vector<Vec3> positions(n + 1), velocities(n + 1);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    for (std::size_t i = 0; i <= n; ++i) {
      positions[i] = agents[i].state.position;
      velocities[i] = rigid_body::rotation_body_to_inertial(agents[i].state.attitude) *
                      agents[i].state.velocity;
    }
    std::vector<Vec3> forces = control_forces(network, positions, velocities, pid, config.dt);
    for (std::size_t i = 0; i <= n; ++i) {
      auto& agent = agents[i];
      rigid_body::Wrench w;
      w.force_drag = -config.drag_coefficient * agent.state.velocity;
      if (i > 0) {
        const bool active =
            config.activation_times.empty() || t >= config.activation_times[i - 1];
        if (active) {
          w.force_propulsion =
              rigid_body::rotation_inertial_to_body(agent.state.attitude) * forces[i - 1];
        } else {
          pid.integral[i - 1].setZero();
        }
      }
      agent.state = rigid_body::step(agent.state, w, agent.params, config.dt, t);
    }
    result.trajectory.push_back(sample(static_cast<double>(k + 1) * config.dt, agents, network));
  }
  result.final_error = result.trajectory.back().error_norm;
  result.converged = result.final_error < config.tolerance;
  return result;
}

}  // namespace qauto::formation
