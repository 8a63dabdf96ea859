#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jssa/agents.hpp"
#include "jssa/jpc.hpp"
#include "jssa/kinematics.hpp"
#include "jssa/safeguard.hpp"
#include "jssa/safety_index.hpp"

namespace jssa {

enum class SafeguardMode { kJssa, kSsa, kOff };

std::string_view to_string(SafeguardMode m);
SafeguardMode parse_mode(std::string_view s);

struct Scenario {
  std::string name = "scenario";
  KinematicChain chain = make_default_arm();
  JointState initial = JointState::at_rest(default_home_configuration());
  std::optional<Task> task;
  Environment environment;
  SafetyIndexParams params;
  CostMatrix V = CostMatrix::identity(6);
  JerkBounds bounds = default_jerk_bounds();
  double tau = 0.008;
  SafeguardMode mode = SafeguardMode::kJssa;
  double duration = 5.0;
  std::uint64_t seed = 0;
  ReplanConfig replan;
  /// Minimax samples drawn before a CLI run; 0 skips the check.
  std::size_t verify_budget = 0;

  std::size_t step_count() const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// One control step. Distances and the joint state refer to time t, before the command acts.
struct StepRecord {
  std::size_t step = 0;
  double t = 0.0;
  double d = 0.0;
  double d_dot = 0.0;
  double d_ddot = 0.0;
  double phi = 0.0;
  double S = 0.0;
  double lu = 0.0;
  bool active = false;
  Fallback fallback = Fallback::kNone;
  bool preclip_violation = false;
  int robot_link = 0;
  int agent_id = -1;
  int agent_link = 0;
  double relative_speed = 0.0;
  double relative_accel = 0.0;
  std::uint64_t epoch = 0;
  VecX u_nom;
  VecX u_safe;
  VecX theta;
};

struct RunMetrics {
  double min_distance = 0.0;
  std::optional<double> first_trigger;
  std::optional<double> last_trigger;
  double active_duration = 0.0;
  double mean_critical_velocity = 0.0;
  double mean_critical_acceleration = 0.0;
  double mean_active_velocity = 0.0;
  double mean_active_acceleration = 0.0;
  std::size_t steps = 0;
  std::size_t active_steps = 0;
  std::size_t violations = 0;
  std::size_t fallback_steps = 0;
  std::size_t preclip_violations = 0;
  std::size_t bound_violations = 0;

  bool operator==(const RunMetrics&) const = default;
};

/// Pure function of the log.
RunMetrics compute_metrics(const std::vector<StepRecord>& log, double tau, double d_min,
                           const JerkBounds& bounds);

struct WorldState {
  JointState robot;
  Environment environment;
  double t = 0.0;
  std::size_t step = 0;
};

class Simulation {
 public:
  /// Validates the scenario and the root condition of its safety index.
  explicit Simulation(Scenario scenario);

  /// Advances one step; `inputs` maps dynamic-agent index to an external target.
  const StepRecord& step(const std::map<int, ExternalInput>& inputs = {});
  bool finished() const { return world_.step >= scenario_.step_count(); }

  const WorldState& world() const { return world_; }
  const Scenario& scenario() const { return scenario_; }
  const std::vector<StepRecord>& log() const { return log_; }
  const ReplanCoordinator& coordinator() const { return coordinator_; }

  /// Takes effect from the next step. Throws ConfigError if the roots condition fails.
  void set_safety_params(const SafetyIndexParams& params);

 private:
  Scenario scenario_;
  WorldState world_;
  ReplanCoordinator coordinator_;
  std::vector<StepRecord> log_;
};

struct RunResult {
  std::vector<StepRecord> log;
  RunMetrics metrics;
  std::vector<ReplanEvent> replans;
};

RunResult run(const Scenario& scenario);

struct SweepRow {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  RunMetrics metrics;
};

/// One run per (lambda1, lambda2) cell, lambda1 outer. Throws ConfigError on an empty grid.
std::vector<SweepRow> sweep(const Scenario& base, const std::vector<double>& lambda1s,
                            const std::vector<double>& lambda2s);

struct ModeComparison {
  RunResult jssa;
  RunResult ssa;
};

ModeComparison compare_modes(const Scenario& scenario);

}  // namespace jssa
