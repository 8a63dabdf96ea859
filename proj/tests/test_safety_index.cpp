#include <doctest.h>

#include "jssa/errors.hpp"
#include "jssa/safety_index.hpp"
#include "support/oracles.hpp"

using namespace jssa;

TEST_SUITE("safety_index") {
  TEST_CASE("phi and its trigger thresholds") {
    SafetyIndexParams p;
    CHECK(phi(p, 0.05, 0.0, 0.0) == doctest::Approx(0.0));
    CHECK(phi(p, 0.3, -0.2, 0.5) == doctest::Approx(0.0025 - 0.09 + 0.6 - 0.5));
    const double t = trigger_threshold_d_dot(p, 0.3, 0.5);
    CHECK(phi(p, 0.3, t, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(phi(p, 0.3, t - 0.01, 0.5) > 0.0);
    const double s = trigger_threshold_d_ddot(p, 0.3, -0.2);
    CHECK(phi(p, 0.3, -0.2, s) == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("root condition") {
    SafetyIndexParams p;
    p.lambda1 = 3.0;
    p.lambda2 = 1.0;
    CHECK(validate_roots(p));
    p.lambda1 = 1.0;
    CHECK_FALSE(validate_roots(p));
    p.lambda1 = 2.0;  // double root at -1
    CHECK(validate_roots(p));
    p.lambda1 = 6.0;
    p.lambda2 = 8.0;
    CHECK(validate_roots(p));
    p.lambda2 = 0.0;
    CHECK(validate_roots(p));
    p.lambda1 = -1.0;
    CHECK_FALSE(validate_roots(p));
  }

  TEST_CASE("eta allowance") {
    CHECK(phi_allowance(0.1, 2.0) == doctest::Approx(1.8));
    CHECK(phi_allowance(0.1, -1.0) == 0.0);
    CHECK(phi_allowance(1.0, 3.0) == 0.0);
  }

  TEST_CASE("triple integrator transition") {
    const double tau = 0.008;
    Vec9 x;
    x << 1, 2, 3, -1, 0.5, 0, 2, -3, 1;
    const Vec3 j(10, -20, 5);
    const Vec9 next = cartesian_transition(tau) * x + cartesian_input(tau) * j;
    const Vec3 p = x.segment<3>(0), v = x.segment<3>(3), a = x.segment<3>(6);
    CHECK((next.segment<3>(0) - (p + v * tau + a * tau * tau / 2 + j * tau * tau * tau / 6)).norm() < 1e-14);
    CHECK((next.segment<3>(3) - (v + a * tau + j * tau * tau / 2)).norm() < 1e-14);
    CHECK((next.segment<3>(6) - (a + j * tau)).norm() < 1e-14);
  }

  TEST_CASE("constraint gradient matches finite differences") {
    oracle::Rng rng(21);
    SafetyIndexParams p;
    for (int k = 0; k < 100; ++k) {
      Vec9 d;
      for (int i = 0; i < 9; ++i) d[i] = oracle::uniform(rng, -1, 1);
      d.segment<3>(0) = d.segment<3>(0).normalized() * oracle::uniform(rng, 0.2, 1.5);
      const Vec9 g = constraint_gradient(p, d, 0.1);
      for (int i = 0; i < 9; ++i) {
        Vec9 hi = d, lo = d;
        hi[i] += 1e-6;
        lo[i] -= 1e-6;
        const double fd = (constraint_value(p, hi, 0.1) - constraint_value(p, lo, 0.1)) / 2e-6;
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
      const Vec3 dp = d.segment<3>(0), dv = d.segment<3>(3), da = d.segment<3>(6);
      CHECK(constraint_value(p, d, 0.1) == doctest::Approx(oracle::exact_phi_times_d(p, dp, dv, da, 0.1)).epsilon(1e-12));
    }
  }

  TEST_CASE("linearized constraint tracks phi times d over one step on 10^4 states") {
    const auto c = oracle::check_linearization(10000, 12);
    INFO(c.detail);
    CHECK(c.passed);
  }

  TEST_CASE("minimax passes for (3, 1), deterministically, and the root check rejects (1, 1)") {
    const auto c = oracle::check_minimax(100000);
    INFO(c.detail);
    CHECK(c.passed);
  }

  TEST_CASE("minimax on complex roots still runs but the pair is rejected up front") {
    SafetyIndexParams p;
    p.lambda1 = 1.0;
    p.lambda2 = 1.0;
    CHECK_FALSE(validate_roots(p));
    MinimaxConfig cfg;
    cfg.budget = 1000;
    const MinimaxReport r = verify_minimax(p, default_jerk_bounds(), make_default_arm(), cfg);
    CHECK(r.evaluated > 0);
  }

  TEST_CASE("minimax rejects an empty budget") {
    MinimaxConfig cfg;
    cfg.budget = 0;
    CHECK_THROWS(verify_minimax(SafetyIndexParams{}, default_jerk_bounds(), make_default_arm(), cfg));
  }
}
