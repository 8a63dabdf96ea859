#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "jssa/geometry.hpp"
#include "jssa/kinematics.hpp"

namespace jssa {

using Mat9x3 = Eigen::Matrix<double, 9, 3>;

/// How L is obtained from the relative-state forms.
enum class ConstraintForm {
  /// Exact first-order Taylor coefficient of phi*d in u (default).
  kGradient,
  /// 2 (l1 D'U2 + l2 D'U3 + l2 D'U4) B J, kept for comparison.
  kPrinted,
};

/// phi = d_min^2 - d^2 - lambda1 d_dot - lambda2 d_ddot
struct SafetyIndexParams {
  double d_min = 0.05;
  double lambda1 = 3.0;
  double lambda2 = 1.0;
  /// eta(phi) = eta_gain * phi. While phi > 0 the next value must satisfy
  /// phi+ <= max(phi - eta(phi), 0); with phi <= 0 this is phi+ <= 0.
  double eta_gain = 0.1;
  bool roots_negative_real = false;
  bool minimax_passed = false;
  ConstraintForm form = ConstraintForm::kGradient;
};

double phi(const SafetyIndexParams& params, double d, double d_dot, double d_ddot);

/// Upper bound allowed for the next phi: max(phi - eta_gain phi, 0).
double phi_allowance(double eta_gain, double phi_now);

/// True iff every root of 1 + lambda1 s + lambda2 s^2 is negative real.
bool validate_roots(const SafetyIndexParams& params);

/// Approach-speed threshold: phi >= 0 iff d_dot <= the returned value (lambda1 > 0).
double trigger_threshold_d_dot(const SafetyIndexParams& params, double d, double d_ddot);
/// Acceleration threshold: phi >= 0 iff d_ddot <= the returned value (lambda2 > 0).
double trigger_threshold_d_ddot(const SafetyIndexParams& params, double d, double d_dot);

/// Cartesian triple-integrator transition A(tau) and input map B(tau) for 9-vector states.
Mat9 cartesian_transition(double tau);
Mat9x3 cartesian_input(double tau);

/// Linearized one-step safety constraint L u >= S.
struct LinearizedConstraint {
  Eigen::RowVectorXd L;
  double S = 0.0;
  /// Relative state after one step with zero jerk.
  Vec9 delta_cap = Vec9::Zero();
  /// Allowance already folded into S (phi+ d+ <= allowance * d+).
  double allowance = 0.0;
  bool valid = false;
};

/// phi * d evaluated at relative state delta, with d the core distance |dp| and the surface
/// distance |dp| - radius_sum inside phi.
double constraint_value(const SafetyIndexParams& params, const Vec9& delta, double radius_sum);

/// Gradient of constraint_value with respect to delta.
Vec9 constraint_gradient(const SafetyIndexParams& params, const Vec9& delta, double radius_sum);

/// Builds S and L for the pair at state q. `agent_next` is the agent witness predicted one
/// step ahead. Throws DegenerateDistance when the predicted pair coincides.
LinearizedConstraint build_constraint(const SafetyIndexParams& params, const CriticalPair& pair,
                                      const PointJacobianBundle& bundle,
                                      const PointState& agent_next, const JointState& q,
                                      double tau);

struct MinimaxConfig {
  std::size_t budget = 100000;
  std::uint64_t seed = 1;
  /// Sampled surface distances lie in [d_min, d_max].
  double d_max = 2.0;
  /// |d_dot| sampling range (m/s).
  double relative_speed = 1.5;
  /// |d_ddot| sampling range, used only when lambda2 == 0 (m/s^2).
  double relative_accel = 10.0;
  /// |theta_dot_i| sampling range (rad/s). 0 samples the arm momentarily at rest.
  double joint_speed = 0.0;
  /// Samples whose required joint acceleration exceeds this are unreachable (rad/s^2).
  double joint_accel = 20.0;
  /// Robot capsules carrying the sampled critical point; empty = last capsule.
  std::vector<int> capsules;
  int strata = 64;
};

struct MinimaxSample {
  double d = 0.0;
  double d_dot = 0.0;
  double d_ddot = 0.0;
  VecX theta;
  VecX theta_dot;
  VecX theta_ddot;
  int capsule = 0;
  Vec3 local_point = Vec3::Zero();
  Vec3 direction = Vec3::Zero();
  /// min over u in U of -2 d d_dot - lambda1 d_ddot - lambda2 d_dddot(u)
  double value = 0.0;
};

struct MinimaxReport {
  bool passed = false;
  double worst_value = 0.0;
  std::optional<MinimaxSample> worst;
  std::size_t evaluated = 0;
  std::size_t unreachable = 0;
};

/// Sampled check that a control keeping phi from increasing exists on phi = 0.
MinimaxReport verify_minimax(const SafetyIndexParams& params, const JerkBounds& bounds,
                             const KinematicChain& chain, const MinimaxConfig& config);

/// Max of c.u over the box.
double box_support(const Eigen::RowVectorXd& c, const JerkBounds& bounds);

struct SurfaceGrid {
  double d_lo = 0.0, d_hi = 1.0;
  int d_n = 21;
  double d_dot_lo = -1.5, d_dot_hi = 1.5;
  int d_dot_n = 21;
  double d_ddot_lo = -5.0, d_ddot_hi = 5.0;
  int d_ddot_n = 21;
};

struct SurfaceSample {
  double d = 0.0;
  double d_dot = 0.0;
  double d_ddot = 0.0;
  double phi = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double d_min = 0.0;
};

/// Samples of the phi = 0 surface over the grid followed by samples of the phi0 = 0 plane
/// (d = d_min).
std::vector<SurfaceSample> export_phase_surface(const SafetyIndexParams& params,
                                                const SurfaceGrid& grid);
void write_surface_csv(std::ostream& out, const std::vector<SurfaceSample>& samples);

}  // namespace jssa
