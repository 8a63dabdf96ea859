#pragma once

#include <span>
#include <string_view>

#include <Eigen/Core>

#include "jssa/geometry.hpp"
#include "jssa/kinematics.hpp"
#include "jssa/safety_index.hpp"

namespace jssa {

/// Positive definite weight of the projection objective (u_s - u)' V (u_s - u).
class CostMatrix {
 public:
  /// Throws ConfigError unless V is square, symmetric and positive definite.
  explicit CostMatrix(Eigen::MatrixXd v);
  static CostMatrix identity(int n);

  const Eigen::MatrixXd& matrix() const { return v_; }
  int dim() const { return static_cast<int>(v_.rows()); }

 private:
  Eigen::MatrixXd v_;
};

enum class Fallback { kNone, kClip, kMaxBrake };

std::string_view to_string(Fallback f);

struct QpSolution {
  VecX u;
  /// Multiplier of L u >= S.
  double mu = 0.0;
  /// Multipliers of u >= lower and u <= upper.
  VecX lower_multipliers;
  VecX upper_multipliers;
  bool feasible = false;
  int iterations = 0;
};

/// min (x - u_nom)' V (x - u_nom)  s.t.  L x >= S, lower <= x <= upper.
/// Primal active-set method started from a feasible point; exact up to linear-algebra rounding.
/// Returns feasible = false (and the L-maximizing box vertex) if no feasible x exists.
QpSolution solve_projection_qp(const VecX& u_nom, const Eigen::RowVectorXd& L, double S,
                               const JerkBounds& bounds, const CostMatrix& V);

/// Max-norm of the stationarity residual 2V(x - u_nom) - mu L' - lambda_lo + lambda_hi.
double kkt_residual(const QpSolution& sol, const VecX& u_nom, const Eigen::RowVectorXd& L,
                    const CostMatrix& V);

/// Box vertex maximizing L u; coordinates with L_i = 0 keep the clipped nominal.
VecX max_safety_effort(const VecX& u_nom, const Eigen::RowVectorXd& L, const JerkBounds& bounds);

struct SafeControlOutcome {
  JerkCommand u_safe;
  bool active = false;
  LinearizedConstraint constraint;
  Fallback fallback_used = Fallback::kNone;
  double objective_value = 0.0;

  // Diagnostics of the critical pair at the current state.
  double d = 0.0;
  double d_dot = 0.0;
  double d_ddot = 0.0;
  double phi = 0.0;
  double lu = 0.0;
  int robot_capsule = -1;
  int agent_index = -1;
  int agent_capsule = -1;
  double relative_speed = 0.0;
  double relative_accel = 0.0;
  /// SSA only: the differenced jerk exceeded the bounds before clipping.
  bool preclip_violation = false;
};

SafeControlOutcome project_safe(const JerkCommand& u_nom, const LinearizedConstraint& constraint,
                                const JerkBounds& bounds, const CostMatrix& V);

/// Monitors the nominal jerk and projects it onto the linearized safe set when needed.
SafeControlOutcome jssa_step(const JerkCommand& u_nom, const KinematicChain& chain,
                             const JointState& q, std::span<const AgentCapsule> environment,
                             const SafetyIndexParams& params, const JerkBounds& bounds,
                             const CostMatrix& V, double tau);

struct SsaParams {
  double d_min = 0.05;
  double lambda1 = 3.0;
  double eta_gain = 0.1;
};

/// Acceleration-level baseline: projects the nominal next acceleration onto the relative
/// degree-2 constraint, differences it back to jerk and clips to the bounds.
SafeControlOutcome ssa_step(const JerkCommand& u_nom, const KinematicChain& chain,
                            const JointState& q, std::span<const AgentCapsule> environment,
                            const SsaParams& params, const JerkBounds& bounds, double tau);

/// Jerk used when the critical pair is degenerate: drives the joint acceleration toward zero
/// as fast as the bounds allow.
JerkCommand max_brake_jerk(const JointState& q, const JerkBounds& bounds, double tau);

}  // namespace jssa
