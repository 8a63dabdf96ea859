#include <doctest.h>

#include <cmath>

#include "jssa/errors.hpp"
#include "jssa/kinematics.hpp"
#include "support/oracles.hpp"

using namespace jssa;

TEST_SUITE("kinematics") {
  TEST_CASE("joint state integrates a constant jerk exactly") {
    JointState q;
    q.theta = VecX::Constant(6, 0.1);
    q.theta_dot = VecX::Constant(6, -0.3);
    q.theta_ddot = VecX::Constant(6, 2.0);
    const VecX u = VecX::LinSpaced(6, -50.0, 50.0);
    const double tau = 0.008;
    const JointState next = step_joint_state(q, u, tau);
    for (int i = 0; i < 6; ++i) {
      CHECK(next.theta[i] == doctest::Approx(0.1 - 0.3 * tau + tau * tau + u[i] * tau * tau * tau / 6.0).epsilon(1e-14));
      CHECK(next.theta_dot[i] == doctest::Approx(-0.3 + 2.0 * tau + u[i] * tau * tau / 2.0).epsilon(1e-14));
      CHECK(next.theta_ddot[i] == doctest::Approx(2.0 + u[i] * tau).epsilon(1e-14));
    }
  }

  TEST_CASE("point Jacobian matches finite differences of the position") {
    oracle::Rng rng(3);
    const KinematicChain chain = make_default_arm();
    for (int k = 0; k < 50; ++k) {
      const JointState q = oracle::random_joint_state(rng, chain, 0.0, 0.0);
      const int frame = 1 + k % chain.dof();
      const Vec3 local(0.05, -0.02, 0.1);
      const Mat3X J = chain.point_jacobian(q.theta, frame, local);
      for (int i = 0; i < chain.dof(); ++i) {
        VecX hi = q.theta, lo = q.theta;
        hi[i] += 1e-6;
        lo[i] -= 1e-6;
        const Vec3 fd = (chain.point_position(hi, frame, local) - chain.point_position(lo, frame, local)) / 2e-6;
        CHECK((fd - J.col(i)).norm() <= 1e-8);
      }
    }
  }

  TEST_CASE("J_dot and J_ddot agree with finite-difference oracles on 500 states") {
    const auto c = oracle::check_jacobian_derivatives(500, 13);
    INFO(c.detail);
    CHECK(c.passed);
  }

  TEST_CASE("base transform moves every capsule") {
    Iso3 mount = Iso3::Identity();
    mount.translation() = Vec3(0.0, 0.0, 0.7);
    const KinematicChain raised = make_default_arm(mount);
    const KinematicChain floor = make_default_arm();
    const VecX theta = default_home_configuration();
    const auto a = floor.forward_kinematics(theta);
    const auto b = raised.forward_kinematics(theta);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK((b[i].translation() - a[i].translation() - Vec3(0.0, 0.0, 0.7)).norm() < 1e-12);
    }
  }

  TEST_CASE("jerk bounds clamp and contain") {
    const JerkBounds b = default_jerk_bounds();
    VecX u = b.upper * 2.0;
    CHECK_FALSE(b.contains(u));
    CHECK(b.contains(b.clamp(u)));
    CHECK(b.contains(b.lower));
    CHECK(b.upper[5] == doctest::Approx(10712.0 * kDegToRad));
  }

  TEST_CASE("invalid joint states are rejected") {
    JointState q = JointState::at_rest(VecX::Zero(6));
    q.theta_dot = VecX::Zero(5);
    CHECK_THROWS_AS(q.validate(), DimensionError);
    q = JointState::at_rest(VecX::Zero(6));
    q.theta[2] = std::nan("");
    CHECK_THROWS_AS(q.validate(), NonFiniteError);
  }
}
