#include <doctest.h>

#include "jssa/errors.hpp"
#include "jssa/jpc.hpp"
#include "jssa/scenarios.hpp"
#include "support/oracles.hpp"

using namespace jssa;

TEST_SUITE("jpc") {
  TEST_CASE("generated buffers hit every waypoint within 1e-6 rad and end at rest") {
    const auto c = oracle::check_jpc_tracking(200, 15);
    INFO(c.detail);
    CHECK(c.passed);
  }

  TEST_CASE("internal replan reaches rest") {
    const auto c = oracle::check_internal_replan(1000, 16);
    INFO(c.detail);
    CHECK(c.passed);
  }

  TEST_CASE("single-joint rest profile is minimal and exact") {
    const double tau = 0.008;
    const auto seq = joint_rest_profile(1.2, -3.0, -60.0, 60.0, tau);
    REQUIRE_FALSE(seq.empty());
    double v = 1.2, a = -3.0;
    for (double u : seq) {
      CHECK(u >= -60.0);
      CHECK(u <= 60.0);
      v += a * tau + u * tau * tau / 2.0;
      a += u * tau;
    }
    CHECK(std::abs(v) < 1e-9);
    CHECK(std::abs(a) < 1e-9);
    CHECK(joint_rest_profile(0.0, 0.0, -60.0, 60.0, tau).empty());
  }

  TEST_CASE("no stale-epoch command is executed under host latency") {
    for (double latency : {0.0, 0.1, 0.5, 2.0}) {
      const auto c = oracle::check_replan_epochs(latency, 20000, 17);
      INFO(c.detail);
      CHECK(c.passed);
      Scenario sc = make_scenario("head_on", 0);
      sc.replan.host_latency = latency;
      const auto s = oracle::check_simulation_epochs(sc);
      INFO(s.detail);
      CHECK(s.passed);
    }
  }

  TEST_CASE("buffer bookkeeping") {
    CommandBuffer b;
    b.commands = {VecX::Constant(2, 1.0), VecX::Constant(2, 2.0)};
    CHECK(next_command(b, 2)[0] == 1.0);
    CHECK(next_command(b, 2)[0] == 2.0);
    CHECK(b.exhausted());
    CHECK(next_command(b, 2) == VecX::Zero(2));
    CommandBuffer r;
    r.commands = {VecX::Constant(2, 5.0)};
    r.cursor = 1;
    const std::uint64_t before = b.epoch;
    replace_buffer(b, r);
    CHECK(b.epoch != before);
    CHECK(b.cursor == 0);
  }

  TEST_CASE("tasks whose sample time is not a multiple of tau are rejected") {
    Task t;
    t.waypoints = {VecX::Zero(6)};
    t.sample_time = 0.013;
    CHECK_THROWS_AS(t.validate(6, 0.008), TaskInfeasible);
    t.sample_time = 0.8;
    CHECK_NOTHROW(t.validate(6, 0.008));
    t.waypoints = {VecX::Zero(5)};
    CHECK_THROWS(t.validate(6, 0.008));
  }

  TEST_CASE("debounce delays the internal replan") {
    const JerkBounds bounds = default_jerk_bounds();
    const JointState q = JointState::at_rest(default_home_configuration());
    ReplanConfig cfg;
    cfg.debounce_steps = 5;
    ReplanCoordinator coord(CommandBuffer{}, bounds, 0.008, cfg);
    coord.after_step(0, true, q);
    for (std::size_t k = 1; k <= 4; ++k) {
      coord.after_step(k, false, q);
      CHECK(coord.events().empty());
    }
    coord.after_step(5, false, q);
    REQUIRE(coord.events().size() == 1);
    CHECK(coord.events()[0].kind == ReplanKind::kInternal);
  }
}
