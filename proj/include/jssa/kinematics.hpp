#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string>
#include <vector>

namespace jssa {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;
using Iso3 = Eigen::Isometry3d;

/// Joint jerk command (rad/s^3), one entry per joint.
using JerkCommand = Eigen::VectorXd;

inline constexpr double kDegToRad = 0.017453292519943295;

/// Stacked joint position / velocity / acceleration of an n-DOF arm.
struct JointState {
  VecX theta;
  VecX theta_dot;
  VecX theta_ddot;

  static JointState at_rest(const VecX& theta);

  int dof() const { return static_cast<int>(theta.size()); }

  /// Throws DimensionError / NonFiniteError when the invariants do not hold.
  void validate() const;
};

/// Box bounds on the joint jerk, lower <= 0 <= upper componentwise.
struct JerkBounds {
  VecX lower;
  VecX upper;

  JerkBounds() = default;
  JerkBounds(VecX lower, VecX upper);

  static JerkBounds symmetric(const VecX& magnitude);
  static JerkBounds symmetric_degrees(const VecX& magnitude_deg);

  int dof() const { return static_cast<int>(lower.size()); }
  bool contains(const VecX& u) const;
  VecX clamp(const VecX& u) const;
};

/// Triple-integrator update of the joint state under constant jerk `u` held for `tau` seconds.
JointState step_joint_state(const JointState& q, const JerkCommand& u, double tau);

struct JointSpec {
  /// Fixed transform from the previous link frame to this joint's frame, applied before the
  /// joint rotation.
  Iso3 origin = Iso3::Identity();
  /// Rotation axis in the joint frame (normalized on construction of the chain).
  Vec3 axis = Vec3::UnitZ();
  double lower = -3.141592653589793;
  double upper = 3.141592653589793;
};

/// A capsule rigidly attached to a link frame. Frame 0 is the base, frame i follows joint i.
struct CapsuleAttachment {
  std::string name;
  int frame = 0;
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.05;
};

struct PointJacobianBundle {
  Mat3X J;
  Mat3X J_dot;
  Mat3X J_ddot;
  Vec3 point = Vec3::Zero();
};

/// Serial chain of revolute joints with capsule bodies.
class KinematicChain {
 public:
  KinematicChain() = default;
  KinematicChain(std::vector<JointSpec> joints, std::vector<CapsuleAttachment> capsules,
                 Iso3 base = Iso3::Identity());

  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const std::vector<CapsuleAttachment>& capsules() const { return capsules_; }
  const Iso3& base() const { return base_; }

  /// World pose of frames 0..n (frame 0 = base).
  std::vector<Iso3> forward_kinematics(const VecX& theta) const;

  Vec3 point_position(const VecX& theta, int frame, const Vec3& local_point) const;

  /// Translational Jacobian of a point fixed in `frame`; columns of joints beyond `frame` are 0.
  Mat3X point_jacobian(const VecX& theta, int frame, const Vec3& local_point) const;

  PointJacobianBundle point_jacobian_bundle(const JointState& q, int frame,
                                            const Vec3& local_point) const;

  VecX lower_limits() const;
  VecX upper_limits() const;

 private:
  void check_theta(const VecX& theta) const;
  void check_frame(int frame) const;

  std::vector<JointSpec> joints_;
  std::vector<CapsuleAttachment> capsules_;
  Iso3 base_ = Iso3::Identity();
};

/// j = J_ddot * theta_dot + 2 J_dot * theta_ddot + J u
Vec3 cartesian_jerk_of_point(const PointJacobianBundle& bundle, const JointState& q,
                             const JerkCommand& u);

/// Cartesian velocity and acceleration of the bundle's point at state q.
Vec3 point_velocity(const PointJacobianBundle& bundle, const JointState& q);
Vec3 point_acceleration(const PointJacobianBundle& bundle, const JointState& q);

/// Approximate LR Mate 200iD/7L-class 6-DOF arm with five capsules.
/// Link lengths are plausible published-style values, not a calibrated model.
KinematicChain make_default_arm(const Iso3& base = Iso3::Identity());

/// Home configuration used by the shipped scenarios for make_default_arm().
VecX default_home_configuration();

/// Jerk bounds of the reference arm, converted from deg/s^3.
JerkBounds default_jerk_bounds();

}  // namespace jssa
