#include <doctest.h>

#include "jssa/errors.hpp"
#include "jssa/safeguard.hpp"
#include "support/oracles.hpp"

using namespace jssa;

TEST_SUITE("safeguard") {
  TEST_CASE("QP agrees with the active-set enumeration oracle on 1000 instances") {
    const auto c = oracle::check_qp(1000, 11);
    INFO(c.detail);
    CHECK(c.passed);
  }

  TEST_CASE("QP on a diagonal cost is a clipped projection") {
    const JerkBounds b = JerkBounds::symmetric(VecX::Constant(3, 10.0));
    const CostMatrix V = CostMatrix::identity(3);
    Eigen::RowVectorXd L(3);
    L << 1.0, 0.0, 0.0;
    const QpSolution sol = solve_projection_qp(Vec3(-5, 20, 3), L, 2.0, b, V);
    CHECK(sol.feasible);
    CHECK(sol.u[0] == doctest::Approx(2.0));
    CHECK(sol.u[1] == doctest::Approx(10.0));
    CHECK(sol.u[2] == doctest::Approx(3.0));
    CHECK(sol.mu > 0.0);
  }

  TEST_CASE("infeasible QP returns the L-maximizing vertex") {
    const JerkBounds b = JerkBounds::symmetric(VecX::Constant(2, 1.0));
    Eigen::RowVectorXd L(2);
    L << 1.0, -1.0;
    const QpSolution sol = solve_projection_qp(VecX::Zero(2), L, 5.0, b, CostMatrix::identity(2));
    CHECK_FALSE(sol.feasible);
    CHECK(sol.u[0] == 1.0);
    CHECK(sol.u[1] == -1.0);
    CHECK(max_safety_effort(VecX::Zero(2), L, b) == sol.u);
  }

  TEST_CASE("cost matrix validation") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 0, 1;
    CHECK_THROWS_AS(CostMatrix{m}, ConfigError);
    m << 1, 0, 0, -1;
    CHECK_THROWS_AS(CostMatrix{m}, ConfigError);
    CHECK_THROWS_AS(CostMatrix{Eigen::MatrixXd(2, 3)}, ConfigError);
  }

  TEST_CASE("projection leaves a safe nominal untouched and enforces the constraint otherwise") {
    oracle::Rng rng(31);
    const KinematicChain chain = make_default_arm();
    const JerkBounds bounds = default_jerk_bounds();
    const CostMatrix V = CostMatrix::identity(6);
    SafetyIndexParams params;
    int active = 0;
    for (int k = 0; k < 300; ++k) {
      const JointState q = oracle::random_joint_state(rng, chain, 1.0, 3.0);
      const std::vector<AgentCapsule> env{oracle::random_agent_near(rng, chain, q, 1.5, 0.0)};
      if (critical_pair(chain, q, env).distance < 0.05) continue;
      const VecX u_nom = oracle::uniform_vec(rng, bounds.lower, bounds.upper);
      const SafeControlOutcome out = jssa_step(u_nom, chain, q, env, params, bounds, V, 0.008);
      CHECK(bounds.contains(out.u_safe));
      if (out.fallback_used != Fallback::kNone) continue;
      CHECK(out.constraint.L.dot(out.u_safe) >= out.constraint.S - 1e-9 * (1.0 + std::abs(out.constraint.S)));
      if (!out.active) {
        CHECK(out.u_safe == u_nom);
      } else {
        ++active;
      }
    }
    CHECK(active > 0);
  }

  TEST_CASE("max brake drives the joint acceleration toward zero within the bounds") {
    const JerkBounds bounds = default_jerk_bounds();
    JointState q = JointState::at_rest(VecX::Zero(6));
    q.theta_ddot = VecX::LinSpaced(6, -20.0, 20.0);
    const VecX u = max_brake_jerk(q, bounds, 0.008);
    CHECK(bounds.contains(u));
    const JointState next = step_joint_state(q, u, 0.008);
    CHECK(next.theta_ddot.cwiseAbs().maxCoeff() < q.theta_ddot.cwiseAbs().maxCoeff());
  }

  TEST_CASE("SSA output is clipped to the bounds") {
    oracle::Rng rng(32);
    const KinematicChain chain = make_default_arm();
    const JerkBounds bounds = default_jerk_bounds();
    SsaParams params;
    int preclip = 0;
    for (int k = 0; k < 300; ++k) {
      const JointState q = oracle::random_joint_state(rng, chain, 1.0, 3.0);
      const std::vector<AgentCapsule> env{oracle::random_agent_near(rng, chain, q, 1.5, 0.0)};
      if (critical_pair(chain, q, env).distance < 0.05) continue;
      const VecX u_nom = oracle::uniform_vec(rng, bounds.lower, bounds.upper);
      const SafeControlOutcome out = ssa_step(u_nom, chain, q, env, params, bounds, 0.008);
      CHECK(bounds.contains(out.u_safe));
      preclip += out.preclip_violation ? 1 : 0;
      if (out.preclip_violation) CHECK(out.fallback_used != Fallback::kNone);
    }
    CHECK(preclip > 0);
  }
}
