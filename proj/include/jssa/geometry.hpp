#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "jssa/kinematics.hpp"

namespace jssa {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

struct Capsule {
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.0;
};

/// Cartesian position, velocity and acceleration of a single point.
struct PointState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();

  Vec9 stacked() const;
};

struct CapsuleDistance {
  /// Segment-segment distance minus both radii; negative under penetration.
  double distance = 0.0;
  Vec3 witness_a = Vec3::Zero();
  Vec3 witness_b = Vec3::Zero();
  double s = 0.0;
  double t = 0.0;
};

/// Closest points between the core segments of two capsules. For parallel segments the
/// returned pair is the one with the smallest s, then the smallest t.
CapsuleDistance capsule_distance(const Capsule& a, const Capsule& b);

/// An agent capsule together with the kinematics of its two end points.
struct AgentCapsule {
  Capsule capsule;
  PointState end0;
  PointState end1;
  int agent = 0;
  int capsule_id = 0;
};

struct CriticalPair {
  PointState robot_point;
  PointState agent_point;
  /// Surface distance: core distance minus both radii.
  double distance = 0.0;
  double core_distance = 0.0;
  double radius_sum = 0.0;
  int robot_capsule = 0;
  int robot_frame = 0;
  int agent_index = 0;
  int agent_capsule = 0;
  Vec3 robot_local_point = Vec3::Zero();
};

/// World-frame capsules of the chain at joint angles theta, in attachment order.
std::vector<Capsule> robot_capsules(const KinematicChain& chain, const VecX& theta);

/// Globally closest robot/agent capsule pair. The robot witness is frozen on its link and its
/// velocity and acceleration come from the point Jacobian bundle; the agent witness
/// interpolates the kinematics of its capsule end points.
CriticalPair critical_pair(const KinematicChain& chain, const JointState& q,
                           std::span<const AgentCapsule> agents);

/// Minimum surface distance only (no Jacobians).
double minimum_distance(const KinematicChain& chain, const VecX& theta,
                        std::span<const AgentCapsule> agents);

struct DistanceDerivatives {
  double d = 0.0;  ///< core-point distance
  double d_dot = 0.0;
  double d_ddot = 0.0;
};

/// Relative state delta = M - H as a 9-vector (position, velocity, acceleration).
Vec9 relative_state(const PointState& robot, const PointState& agent);

/// Selector matrices extracting |dp|^2, dp.dv, |dv|^2 and dp.da from delta^T U delta.
const Mat9& selector_u1();
const Mat9& selector_u2();
const Mat9& selector_u3();
const Mat9& selector_u4();

inline constexpr double kDegenerateDistance = 1e-9;

/// d, d_dot, d_ddot of the core points from the selector-matrix forms.
/// Throws DegenerateDistance when d <= 1e-9.
DistanceDerivatives distance_derivatives(const Vec9& delta);
DistanceDerivatives distance_derivatives(const CriticalPair& pair);

}  // namespace jssa
