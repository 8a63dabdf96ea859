#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "jssa/config.hpp"
#include "jssa/errors.hpp"
#include "jssa/scenarios.hpp"

using namespace jssa;
namespace fs = std::filesystem;

namespace {

const fs::path kData = JSSA_DATA_DIR;

struct SeedEnv {
  explicit SeedEnv(const char* value) {
    if (value) {
      setenv("JSSA_SEED", value, 1);
    } else {
      unsetenv("JSSA_SEED");
    }
  }
  ~SeedEnv() { unsetenv("JSSA_SEED"); }
};

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("shipped scenario files load") {
    for (const char* name : {"hold", "head_on", "decelerating", "handover", "decelerating_unprotected",
                             "decelerating_ssa", "interactive"}) {
      INFO(name);
      CHECK_NOTHROW(load_scenario(kData / "scenarios" / (std::string(name) + ".json")));
    }
    CHECK(load_scenario(kData / "scenarios" / "decelerating_unprotected.json").mode == SafeguardMode::kOff);
    CHECK(load_scenario(kData / "scenarios" / "decelerating_ssa.json").mode == SafeguardMode::kSsa);
    const Scenario live = load_scenario(kData / "scenarios" / "interactive.json");
    CHECK(live.duration == 600.0);
    REQUIRE(live.environment.dynamic_agents.size() == 1);
  }

  TEST_CASE("family files match the built-in scenarios") {
    const Scenario a = load_scenario(kData / "scenarios" / "head_on.json");
    const Scenario b = make_scenario("head_on", 0);
    CHECK(run(a).metrics == run(b).metrics);
  }

  TEST_CASE("malformed input is a configuration error") {
    try {
      load_scenario(kData / "scenarios" / "malformed.json");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("JSON parse error") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_scenario(R"({"family": "hold", "speed": 3})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"family": "unknown"})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"family": "hold", "seed": -1})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"family": "hold", "mode": "fast"})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"family": "hold", "tau_s": 0})"), ConfigError);
    CHECK_THROWS_AS(Simulation(parse_scenario(R"({"family": "hold", "safety": {"lambda1": 1, "lambda2": 1}})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"family": "hold", "duration_s": 1.5})"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"family": "hold", "replan": {"host_latency_s": -1}})"), ConfigError);
    CHECK_THROWS_AS(load_scenario(kData / "scenarios" / "missing.json"), ConfigError);
  }

  TEST_CASE("overrides apply on top of the family") {
    const Scenario sc = parse_scenario(
        R"({"family": "head_on", "seed": 4, "duration_s": 1.6, "safety": {"lambda1": 6, "lambda2": 7},
            "replan": {"debounce_steps": 3, "host_latency_s": 0.25}})");
    CHECK(sc.seed == 4);
    CHECK(sc.duration == 1.6);
    CHECK(sc.params.lambda1 == 6.0);
    CHECK(sc.params.lambda2 == 7.0);
    CHECK(sc.replan.debounce_steps == 3);
    CHECK(sc.replan.host_latency == 0.25);
    CHECK(parse_scenario(R"({"family": "head_on", "seed": 4})", 9).seed == 9);
  }

  TEST_CASE("JSSA_SEED") {
    {
      SeedEnv env(nullptr);
      CHECK_FALSE(seed_from_environment());
    }
    {
      SeedEnv env("42");
      REQUIRE(seed_from_environment());
      CHECK(*seed_from_environment() == 42);
    }
    for (const char* bad : {"-3", "4x", "abc"}) {
      SeedEnv env(bad);
      CHECK_THROWS_AS(seed_from_environment(), ConfigError);
    }
  }

  TEST_CASE("task round trip") {
    Task t;
    t.waypoints = {reach_configuration(), default_home_configuration()};
    t.sample_time = 1.25;
    const Task back = task_from_json(task_to_json(t));
    REQUIRE(back.waypoints.size() == 2);
    CHECK(back.waypoints[0] == t.waypoints[0]);
    CHECK(back.waypoints[1] == t.waypoints[1]);
    CHECK(back.sample_time == 1.25);
  }

  TEST_CASE("verify requests") {
    const VerifyRequest r = load_verify_request(kData / "verify" / "default.json");
    CHECK(r.params.lambda1 == 3.0);
    CHECK(r.params.lambda2 == 1.0);
    CHECK(r.params.d_min == 0.05);
    CHECK(r.minimax.budget == 100000);
    CHECK(r.minimax.seed == 1);
    CHECK(r.bounds.dof() == 6);
    CHECK(load_verify_request(kData / "verify" / "complex_roots.json").params.lambda1 == 1.0);
    CHECK_THROWS_AS(verify_request_from_json(Json{{"lambda1", 3}}), ConfigError);
    CHECK_THROWS_AS(verify_request_from_json(Json{{"lambda1", 3}, {"lambda2", 1}, {"budget", -5}}), ConfigError);
    CHECK_THROWS_AS(verify_request_from_json(Json{{"lambda1", 3}, {"lambda2", 1}, {"extra", 1}}), ConfigError);
    CHECK_THROWS_AS(verify_request_from_json(Json{{"lambda1", 3}, {"lambda2", 1}, {"bounds_deg", {1, 2}}}),
                    ConfigError);
  }
}
