#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "jssa/geometry.hpp"

namespace jssa {

struct StaticAgent {
  std::string label;
  std::vector<Capsule> capsules;
};

struct SkeletonLink {
  std::string name;
  int joint_a = 0;
  int joint_b = 0;
  double radius = 0.06;
};

/// Named points in the agent root frame (x forward, z up, origin on the floor) and the
/// capsules spanning pairs of them.
struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<Vec3> rest_points;
  std::vector<SkeletonLink> links;

  int joint_index(std::string_view name) const;

  /// Six capsules in the order head, core body, right arm, left arm, right leg, left leg.
  /// Dimensions are approximate adult proportions.
  static Skeleton human();
};

enum class Interpolation { kLinear, kSmooth };

struct Keyframe {
  double t = 0.0;
  Vec3 root = Vec3::Zero();
  double yaw = 0.0;
  /// (joint index, offset in the root frame) pairs; joints not listed have zero offset.
  std::vector<std::pair<int, Vec3>> offsets;
};

/// Time-stamped root waypoints with per-joint offsets. Before the first / after the last
/// keyframe the trajectory holds.
struct ScriptedTrajectory {
  std::vector<Keyframe> keyframes;
  Interpolation interpolation = Interpolation::kSmooth;

  struct Sample {
    Vec3 root = Vec3::Zero();
    double yaw = 0.0;
    std::vector<Vec3> offsets;
  };

  /// Throws ConfigError unless timestamps are strictly increasing.
  void validate() const;
  Sample sample(double t, std::size_t joint_count) const;
};

struct ScriptedDriver {
  ScriptedTrajectory script;
};

/// Root target steered from outside the simulation (mouse / UI).
struct ExternalDriver {
  std::optional<Vec3> target;
  double last_input_time = -1e300;
  /// Input older than this makes the agent hold its last velocity.
  double staleness = 0.2;
};

using Driver = std::variant<ScriptedDriver, ExternalDriver>;

struct ExternalInput {
  Vec3 target = Vec3::Zero();
  double stamp = 0.0;
};

/// Agent state plus its driver. Joint accelerations hold the logged estimate; the prediction
/// model treats them as zero.
struct DynamicAgent {
  std::string label;
  Skeleton skeleton;
  Driver driver;
  double speed_bound = 1.5;
  double accel_bound = 5.0;
  /// Exponential smoothing of the velocity estimate, 0 = raw backward difference.
  double velocity_smoothing = 0.0;

  Vec3 root = Vec3::Zero();
  double yaw = 0.0;
  Vec3 root_velocity = Vec3::Zero();
  std::vector<Vec3> offsets;
  std::vector<PointState> joints;

  std::vector<Capsule> capsules() const;
};

/// World joint positions for a root pose and offsets.
std::vector<Vec3> skeleton_points(const Skeleton& skeleton, const Vec3& root, double yaw,
                                  const std::vector<Vec3>& offsets);

/// Places the agent at its driver's time-t pose with velocities taken from the script.
void initialize_agent(DynamicAgent& agent, double t, double tau);

/// Constant-velocity prediction: p += tau v, v unchanged, a = 0.
DynamicAgent predict_agent(const DynamicAgent& agent, double tau);
PointState predict_point(const PointState& point, double tau);

/// Moves the agent to time t (one step of length tau after its current state).
/// Throws ConfigError for a scripted driver without keyframes.
DynamicAgent advance_driver(const DynamicAgent& agent, double t, double tau,
                            const std::optional<ExternalInput>& input = std::nullopt);

/// E = D u O. Dynamic agents are numbered first, then static agents.
struct Environment {
  std::vector<DynamicAgent> dynamic_agents;
  std::vector<StaticAgent> static_agents;

  /// Capsules with end-point kinematics; accelerations are zeroed for prediction.
  std::vector<AgentCapsule> agent_capsules() const;
};

}  // namespace jssa
