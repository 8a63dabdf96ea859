#include "jssa/kinematics.hpp"

#include <cmath>
#include <string>

#include "jssa/errors.hpp"

namespace jssa {

namespace {

// Directional finite-difference step for J_dot / J_ddot (rad per unit direction).
constexpr double kJacobianStep = 1e-5;

bool all_finite(const VecX& v) { return v.allFinite(); }

}  // namespace

JointState JointState::at_rest(const VecX& theta) {
  return JointState{theta, VecX::Zero(theta.size()), VecX::Zero(theta.size())};
}

void JointState::validate() const {
  if (theta.size() < 1 || theta_dot.size() != theta.size() ||
      theta_ddot.size() != theta.size()) {
    throw DimensionError("JointState vectors must share a dimension >= 1");
  }
  if (!all_finite(theta) || !all_finite(theta_dot) || !all_finite(theta_ddot)) {
    throw NonFiniteError("JointState contains non-finite entries");
  }
}

JerkBounds::JerkBounds(VecX lo, VecX hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw DimensionError("jerk bound vectors differ in size");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= 0.0) || !(upper[i] >= 0.0)) {
      throw ConfigError("jerk bounds must satisfy lower <= 0 <= upper");
    }
  }
}

JerkBounds JerkBounds::symmetric(const VecX& magnitude) {
  return JerkBounds(-magnitude.cwiseAbs(), magnitude.cwiseAbs());
}

JerkBounds JerkBounds::symmetric_degrees(const VecX& magnitude_deg) {
  return symmetric(magnitude_deg * kDegToRad);
}

bool JerkBounds::contains(const VecX& u) const {
  if (u.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(u[i] >= lower[i] && u[i] <= upper[i])) return false;
  }
  return true;
}

VecX JerkBounds::clamp(const VecX& u) const { return u.cwiseMax(lower).cwiseMin(upper); }

JointState step_joint_state(const JointState& q, const JerkCommand& u, double tau) {
  q.validate();
  if (u.size() != q.theta.size()) {
    throw DimensionError("jerk command size " + std::to_string(u.size()) +
                         " does not match state size " + std::to_string(q.theta.size()));
  }
  if (!all_finite(u)) throw NonFiniteError("jerk command contains non-finite entries");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error("step duration must be positive");

  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  JointState next;
  next.theta = q.theta + tau * q.theta_dot + 0.5 * t2 * q.theta_ddot + (t3 / 6.0) * u;
  next.theta_dot = q.theta_dot + tau * q.theta_ddot + 0.5 * t2 * u;
  next.theta_ddot = q.theta_ddot + tau * u;
  return next;
}

KinematicChain::KinematicChain(std::vector<JointSpec> joints,
                               std::vector<CapsuleAttachment> capsules, Iso3 base)
    : joints_(std::move(joints)), capsules_(std::move(capsules)), base_(base) {
  if (joints_.empty()) throw ConfigError("kinematic chain needs at least one joint");
  for (auto& j : joints_) {
    const double norm = j.axis.norm();
    if (!(norm > 1e-12)) throw ConfigError("joint axis must be non-zero");
    j.axis /= norm;
    if (!(j.lower < j.upper)) throw ConfigError("joint limits must satisfy lower < upper");
  }
  for (const auto& c : capsules_) {
    if (!(c.radius > 0.0)) throw ConfigError("capsule '" + c.name + "' needs radius > 0");
    if (c.frame < 0 || c.frame > dof()) {
      throw ConfigError("capsule '" + c.name + "' attached to unknown frame");
    }
  }
}

void KinematicChain::check_theta(const VecX& theta) const {
  if (theta.size() != dof()) {
    throw DimensionError("joint vector has size " + std::to_string(theta.size()) +
                         ", chain has " + std::to_string(dof()) + " joints");
  }
}

void KinematicChain::check_frame(int frame) const {
  if (frame < 0 || frame > dof()) {
    throw DimensionError("frame index " + std::to_string(frame) + " out of range");
  }
}

std::vector<Iso3> KinematicChain::forward_kinematics(const VecX& theta) const {
  check_theta(theta);
  std::vector<Iso3> frames;
  frames.reserve(joints_.size() + 1);
  frames.push_back(base_);
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const auto& j = joints_[i];
    Iso3 t = frames.back() * j.origin;
    t.rotate(Eigen::AngleAxisd(theta[static_cast<Eigen::Index>(i)], j.axis));
    frames.push_back(t);
  }
  return frames;
}

Vec3 KinematicChain::point_position(const VecX& theta, int frame, const Vec3& local_point) const {
  check_frame(frame);
  return forward_kinematics(theta)[static_cast<std::size_t>(frame)] * local_point;
}

Mat3X KinematicChain::point_jacobian(const VecX& theta, int frame, const Vec3& local_point) const {
  check_frame(frame);
  const auto frames = forward_kinematics(theta);
  const Vec3 p = frames[static_cast<std::size_t>(frame)] * local_point;
  Mat3X jac = Mat3X::Zero(3, dof());
  for (int i = 0; i < frame; ++i) {
    // Joint i+1 rotates about its axis located at (frame i) * origin.
    const Iso3 joint_frame = frames[static_cast<std::size_t>(i)] * joints_[static_cast<std::size_t>(i)].origin;
    const Vec3 axis = joint_frame.linear() * joints_[static_cast<std::size_t>(i)].axis;
    jac.col(i) = axis.cross(p - joint_frame.translation());
  }
  return jac;
}

PointJacobianBundle KinematicChain::point_jacobian_bundle(const JointState& q, int frame,
                                                          const Vec3& local_point) const {
  q.validate();
  check_theta(q.theta);
  check_frame(frame);

  PointJacobianBundle b;
  b.point = point_position(q.theta, frame, local_point);
  b.J = point_jacobian(q.theta, frame, local_point);

  const double h = kJacobianStep;
  const Mat3X j_plus = point_jacobian(q.theta + h * q.theta_dot, frame, local_point);
  const Mat3X j_minus = point_jacobian(q.theta - h * q.theta_dot, frame, local_point);
  b.J_dot = (j_plus - j_minus) / (2.0 * h);

  // d2J/dt2 = D^2 J[theta_dot, theta_dot] + D J[theta_ddot]
  const Mat3X a_plus = point_jacobian(q.theta + h * q.theta_ddot, frame, local_point);
  const Mat3X a_minus = point_jacobian(q.theta - h * q.theta_ddot, frame, local_point);
  b.J_ddot = (j_plus - 2.0 * b.J + j_minus) / (h * h) + (a_plus - a_minus) / (2.0 * h);
  return b;
}

VecX KinematicChain::lower_limits() const {
  VecX v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = joints_[static_cast<std::size_t>(i)].lower;
  return v;
}

VecX KinematicChain::upper_limits() const {
  VecX v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = joints_[static_cast<std::size_t>(i)].upper;
  return v;
}

Vec3 cartesian_jerk_of_point(const PointJacobianBundle& bundle, const JointState& q,
                             const JerkCommand& u) {
  if (u.size() != bundle.J.cols() || q.theta_dot.size() != bundle.J.cols()) {
    throw DimensionError("cartesian_jerk_of_point: dimension mismatch");
  }
  return bundle.J_ddot * q.theta_dot + 2.0 * bundle.J_dot * q.theta_ddot + bundle.J * u;
}

Vec3 point_velocity(const PointJacobianBundle& bundle, const JointState& q) {
  return bundle.J * q.theta_dot;
}

Vec3 point_acceleration(const PointJacobianBundle& bundle, const JointState& q) {
  return bundle.J * q.theta_ddot + bundle.J_dot * q.theta_dot;
}

KinematicChain make_default_arm(const Iso3& base) {
  auto joint = [](const Vec3& offset, const Vec3& axis, double lo_deg, double hi_deg) {
    JointSpec j;
    j.origin = Iso3::Identity();
    j.origin.translation() = offset;
    j.axis = axis;
    j.lower = lo_deg * kDegToRad;
    j.upper = hi_deg * kDegToRad;
    return j;
  };
  std::vector<JointSpec> joints{
      joint({0.0, 0.0, 0.0}, Vec3::UnitZ(), -170, 170),
      joint({0.05, 0.0, 0.33}, Vec3::UnitY(), -100, 145),
      joint({0.0, 0.0, 0.44}, Vec3::UnitY(), -70, 200),
      joint({0.0, 0.0, 0.035}, Vec3::UnitX(), -190, 190),
      joint({0.42, 0.0, 0.0}, Vec3::UnitY(), -125, 125),
      joint({0.08, 0.0, 0.0}, Vec3::UnitX(), -360, 360),
  };
  std::vector<CapsuleAttachment> capsules{
      {"base", 1, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.33}, 0.08},
      {"upper_arm", 2, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.44}, 0.06},
      {"forearm", 4, {0.0, 0.0, 0.0}, {0.42, 0.0, 0.0}, 0.05},
      {"wrist", 5, {0.0, 0.0, 0.0}, {0.08, 0.0, 0.0}, 0.045},
      {"end_effector", 6, {0.0, 0.0, 0.0}, {0.12, 0.0, 0.0}, 0.04},
  };
  return KinematicChain(std::move(joints), std::move(capsules), base);
}

VecX default_home_configuration() {
  VecX home(6);
  home << 0.0, 0.0, 0.0, 0.0, 90.0 * kDegToRad, 0.0;
  return home;
}

JerkBounds default_jerk_bounds() {
  VecX deg(6);
  deg << 3798, 3408, 3505, 7011, 7011, 10712;
  return JerkBounds::symmetric_degrees(deg);
}

}  // namespace jssa
