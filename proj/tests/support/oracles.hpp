#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "jssa/geometry.hpp"
#include "jssa/jpc.hpp"
#include "jssa/kinematics.hpp"
#include "jssa/safeguard.hpp"
#include "jssa/safety_index.hpp"
#include "jssa/sim.hpp"

namespace jssa::oracle {

using Rng = std::mt19937_64;

struct Check {
  bool passed = false;
  /// Largest error seen (units depend on the check).
  double worst = 0.0;
  std::size_t cases = 0;
  double seconds = 0.0;
  std::string detail;
};

double uniform(Rng& rng, double lo, double hi);
VecX uniform_vec(Rng& rng, const VecX& lo, const VecX& hi);

/// Random joint state within the chain limits.
JointState random_joint_state(Rng& rng, const KinematicChain& chain, double speed, double accel);

/// Short agent capsule placed near a random robot surface point, moving at constant velocity
/// (plus `accel` if non-zero).
AgentCapsule random_agent_near(Rng& rng, const KinematicChain& chain, const JointState& q,
                               double speed, double accel);

/// Central finite differences of J along theta(t) = theta + theta_dot t + theta_ddot t^2 / 2.
struct JacobianDerivativeFd {
  Mat3X J_dot;
  Mat3X J_ddot;
};
JacobianDerivativeFd jacobian_derivatives_fd(const KinematicChain& chain, const JointState& q, int frame,
                                             const Vec3& local_point);

/// Core distance of the frozen critical pair along the exact trajectory at time t.
double pair_distance_at(const KinematicChain& chain, const JointState& q, const JerkCommand& u,
                        const CriticalPair& pair, double t);

/// phi * d from first principles for relative state (dp, dv, da).
double exact_phi_times_d(const SafetyIndexParams& params, const Vec3& dp, const Vec3& dv, const Vec3& da,
                         double radius_sum);

struct QpOracle {
  VecX x;
  double objective = 0.0;
};
/// Enumerates every active set of the projection QP; nullopt when infeasible.
std::optional<QpOracle> enumerate_projection_qp(const VecX& u_nom, const Eigen::RowVectorXd& L, double S,
                                                const JerkBounds& bounds, const CostMatrix& V);

double projection_objective(const VecX& x, const VecX& u_nom, const CostMatrix& V);

/// Stationarity, sign, complementarity and primal feasibility, as a max-norm.
double kkt_violation(const QpSolution& sol, const VecX& u_nom, const Eigen::RowVectorXd& L, double S,
                     const JerkBounds& bounds, const CostMatrix& V);

Check check_jacobian_derivatives(std::size_t states, std::uint64_t seed);
Check check_distance_derivatives(std::size_t rollouts, std::uint64_t seed);
Check check_qp(std::size_t instances, std::uint64_t seed);
Check check_linearization(std::size_t states, std::uint64_t seed);
Check check_minimax(std::size_t budget);
Check check_jpc_tracking(std::size_t tasks, std::uint64_t seed);
Check check_internal_replan(std::size_t states, std::uint64_t seed);
/// Drives the replan coordinator with random safeguard activity and compares every executed
/// command with a shadow copy of the buffer installed last.
Check check_replan_epochs(double host_latency, std::size_t steps, std::uint64_t seed);
/// Same property on a full simulation log.
Check check_simulation_epochs(const Scenario& scenario);

}  // namespace jssa::oracle
