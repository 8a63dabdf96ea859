#include <doctest.h>

#include <sstream>

#include "jssa/errors.hpp"
#include "jssa/scenarios.hpp"
#include "jssa/sim.hpp"
#include "jssa/telemetry.hpp"

using namespace jssa;

namespace {

std::string telemetry(const Scenario& sc) {
  std::ostringstream os;
  write_telemetry_csv(os, run(sc).log);
  return os.str();
}

StepRecord record(double t, double d, bool active) {
  StepRecord r;
  r.t = t;
  r.d = d;
  r.active = active;
  r.relative_speed = active ? 1.0 : 0.0;
  r.relative_accel = active ? 2.0 : 0.0;
  r.u_nom = r.u_safe = r.theta = VecX::Zero(6);
  return r;
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("equal seeds give byte-identical telemetry") {
    for (const auto& family : scenario_families()) {
      const Scenario sc = make_scenario(family, 3);
      CHECK(telemetry(sc) == telemetry(sc));
    }
  }

  TEST_CASE("different seeds give different scripts") {
    CHECK(telemetry(make_scenario("head_on", 1)) != telemetry(make_scenario("head_on", 2)));
  }

  TEST_CASE("shipped scenarios stay safe with JSSA") {
    for (const char* family : {"head_on", "decelerating", "handover"}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const RunResult r = run(make_scenario(family, seed));
        INFO(family << " seed " << seed);
        CHECK(r.metrics.violations == 0);
        CHECK(r.metrics.fallback_steps == 0);
        CHECK(r.metrics.bound_violations == 0);
        CHECK(r.metrics.min_distance >= 0.05);
        CHECK(r.metrics.active_steps > 0);
      }
    }
  }

  TEST_CASE("without the safeguard the approach scenarios collide") {
    for (const char* family : {"head_on", "decelerating"}) {
      Scenario sc = make_scenario(family, 0);
      sc.mode = SafeguardMode::kOff;
      const RunResult r = run(sc);
      CHECK(r.metrics.violations > 0);
      CHECK(r.metrics.active_steps == 0);
    }
  }

  TEST_CASE("SSA keeps less distance and overruns the jerk bounds before clipping") {
    const ModeComparison cmp = compare_modes(make_scenario("decelerating", 0));
    CHECK(cmp.ssa.metrics.min_distance < cmp.jssa.metrics.min_distance);
    CHECK(cmp.ssa.metrics.preclip_violations > 0);
    CHECK(cmp.jssa.metrics.preclip_violations == 0);
    CHECK(cmp.ssa.metrics.bound_violations == 0);
  }

  TEST_CASE("sweep shape") {
    Scenario sc = make_scenario("decelerating", 0);
    sc.duration = 2.0;
    const auto rows = sweep(sc, {6, 7, 8}, {6, 7, 8});
    REQUIRE(rows.size() == 9);
    CHECK(rows[1].lambda1 == 6);
    CHECK(rows[1].lambda2 == 7);
    CHECK(rows[3].lambda1 == 7);

    Scenario one = sc;
    one.params.lambda1 = 7;
    one.params.lambda2 = 6;
    const auto single = sweep(sc, {7}, {6});
    REQUIRE(single.size() == 1);
    CHECK(single[0].metrics == run(one).metrics);

    const auto dup = sweep(sc, {6, 6}, {7});
    CHECK(dup[0].metrics == dup[1].metrics);
    CHECK_THROWS_AS(sweep(sc, {}, {6}), ConfigError);
    CHECK_THROWS_AS(sweep(sc, {6}, {}), ConfigError);
  }

  TEST_CASE("metrics from a hand-written log") {
    const double tau = 0.5;
    std::vector<StepRecord> log{record(0.0, 1.0, false), record(0.5, 0.4, true), record(1.0, 0.04, true),
                                record(1.5, 0.3, false), record(2.0, 0.2, true), record(2.5, 0.6, false)};
    log[2].fallback = Fallback::kMaxBrake;
    log[4].preclip_violation = true;
    const RunMetrics m = compute_metrics(log, tau, 0.05, default_jerk_bounds());
    CHECK(m.min_distance == doctest::Approx(0.04));
    REQUIRE(m.first_trigger);
    CHECK(*m.first_trigger == doctest::Approx(0.5));
    CHECK(*m.last_trigger == doctest::Approx(2.0));
    CHECK(m.active_steps == 3);
    CHECK(m.active_duration == doctest::Approx(1.5));
    CHECK(m.violations == 1);
    CHECK(m.fallback_steps == 1);
    CHECK(m.preclip_violations == 1);
    CHECK(m.steps == 6);
    CHECK(m.mean_active_velocity == doctest::Approx(0.75));
    CHECK(m.mean_active_acceleration == doctest::Approx(1.5));

    const RunMetrics idle = compute_metrics({record(0.0, 1.0, false)}, tau, 0.05, default_jerk_bounds());
    CHECK_FALSE(idle.first_trigger);
    CHECK(idle.active_duration == 0.0);
  }

  TEST_CASE("scenario validation") {
    Scenario sc = make_scenario("hold", 0);
    sc.tau = 0.0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = make_scenario("hold", 0);
    sc.params.lambda1 = 1.0;
    sc.params.lambda2 = 1.0;
    CHECK_THROWS_AS(Simulation{sc}, ConfigError);
    CHECK_THROWS_AS(make_scenario("nonexistent", 0), ConfigError);
  }

  TEST_CASE("live parameter changes apply from the next step") {
    Simulation sim(make_scenario("head_on", 0));
    sim.step();
    SafetyIndexParams p = sim.scenario().params;
    p.lambda1 = 6.0;
    p.lambda2 = 6.0;
    sim.set_safety_params(p);
    CHECK(sim.scenario().params.lambda1 == 6.0);
    p.lambda1 = 1.0;
    p.lambda2 = 1.0;
    CHECK_THROWS_AS(sim.set_safety_params(p), ConfigError);
    CHECK(sim.scenario().params.lambda1 == 6.0);
  }
}
