#include "jssa/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jssa/errors.hpp"
#include "jssa/geometry.hpp"

namespace jssa {

std::string_view to_string(SafeguardMode m) {
  switch (m) {
    case SafeguardMode::kJssa:
      return "jssa";
    case SafeguardMode::kSsa:
      return "ssa";
    case SafeguardMode::kOff:
      return "off";
  }
  return "unknown";
}

SafeguardMode parse_mode(std::string_view s) {
  if (s == "jssa") return SafeguardMode::kJssa;
  if (s == "ssa") return SafeguardMode::kSsa;
  if (s == "off") return SafeguardMode::kOff;
  throw ConfigError("unknown safeguard mode '" + std::string(s) + "'");
}

std::size_t Scenario::step_count() const {
  return static_cast<std::size_t>(std::llround(duration / tau));
}

void Scenario::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("duration must be positive");
  const double ratio = duration / tau;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ConfigError("duration must be a multiple of tau");
  }
  const int n = chain.dof();
  if (initial.dof() != n) throw ConfigError("initial state does not match the robot");
  initial.validate();
  if (bounds.dof() != n || V.dim() != n) throw ConfigError("bounds or cost matrix do not match the robot");
  if (!(params.d_min > 0.0)) throw ConfigError("d_min must be positive");
  if (task) task->validate(n, tau);
  if (chain.capsules().empty()) throw ConfigError("robot has no capsules");
  if (environment.dynamic_agents.empty() && environment.static_agents.empty()) {
    throw ConfigError("scenario has no agents");
  }
}

RunMetrics compute_metrics(const std::vector<StepRecord>& log, double tau, double d_min,
                           const JerkBounds& bounds) {
  RunMetrics m;
  m.steps = log.size();
  if (log.empty()) return m;
  m.min_distance = std::numeric_limits<double>::infinity();
  double sum_v = 0.0;
  double sum_a = 0.0;
  for (const auto& r : log) {
    m.min_distance = std::min(m.min_distance, r.d);
    sum_v += r.relative_speed;
    sum_a += r.relative_accel;
    if (r.active) {
      if (!m.first_trigger) m.first_trigger = r.t;
      m.last_trigger = r.t;
      ++m.active_steps;
    }
    if (r.d < d_min) ++m.violations;
    if (r.fallback == Fallback::kMaxBrake) ++m.fallback_steps;
    if (r.preclip_violation) ++m.preclip_violations;
    if (!bounds.contains(r.u_safe)) ++m.bound_violations;
  }
  const double n = static_cast<double>(log.size());
  m.mean_critical_velocity = sum_v / n;
  m.mean_critical_acceleration = sum_a / n;
  m.active_duration = tau * static_cast<double>(m.active_steps);
  if (m.first_trigger) {
    double wv = 0.0;
    double wa = 0.0;
    std::size_t count = 0;
    for (const auto& r : log) {
      if (r.t < *m.first_trigger || r.t > *m.last_trigger) continue;
      wv += r.relative_speed;
      wa += r.relative_accel;
      ++count;
    }
    m.mean_active_velocity = wv / static_cast<double>(count);
    m.mean_active_acceleration = wa / static_cast<double>(count);
  }
  return m;
}

namespace {

CommandBuffer initial_buffer(const Scenario& s) {
  if (!s.task) return CommandBuffer{};
  return generate(*s.task, s.initial, s.bounds, s.tau);
}

SafeControlOutcome observe_only(const JerkCommand& u_nom, const KinematicChain& chain,
                                const JointState& q, std::span<const AgentCapsule> env,
                                const SafetyIndexParams& params) {
  const CriticalPair pair = critical_pair(chain, q, env);
  SafeControlOutcome out;
  out.u_safe = u_nom;
  out.d = pair.distance;
  out.robot_capsule = pair.robot_capsule;
  out.agent_index = pair.agent_index;
  out.agent_capsule = pair.agent_capsule;
  out.relative_speed = (pair.robot_point.v - pair.agent_point.v).norm();
  out.relative_accel = (pair.robot_point.a - pair.agent_point.a).norm();
  try {
    const DistanceDerivatives dd = distance_derivatives(pair);
    out.d_dot = dd.d_dot;
    out.d_ddot = dd.d_ddot;
  } catch (const DegenerateDistance&) {
  }
  out.phi = phi(params, out.d, out.d_dot, out.d_ddot);
  return out;
}

}  // namespace

Simulation::Simulation(Scenario scenario)
    : scenario_(std::move(scenario)),
      coordinator_((scenario_.validate(), initial_buffer(scenario_)), scenario_.bounds, scenario_.tau,
                   scenario_.replan) {
  if (!validate_roots(scenario_.params)) {
    throw ConfigError("safety index coefficients fail the negative-real-roots condition");
  }
  scenario_.params.roots_negative_real = true;
  world_.robot = scenario_.initial;
  world_.environment = scenario_.environment;
  for (auto& a : world_.environment.dynamic_agents) initialize_agent(a, 0.0, scenario_.tau);
  log_.reserve(scenario_.step_count());
}

void Simulation::set_safety_params(const SafetyIndexParams& params) {
  if (!validate_roots(params)) {
    throw ConfigError("safety index coefficients fail the negative-real-roots condition");
  }
  if (!(params.d_min > 0.0)) throw ConfigError("d_min must be positive");
  scenario_.params = params;
  scenario_.params.roots_negative_real = true;
}

const StepRecord& Simulation::step(const std::map<int, ExternalInput>& inputs) {
  const Scenario& sc = scenario_;
  const std::size_t k = world_.step;
  const double t = static_cast<double>(k) * sc.tau;
  auto& agents = world_.environment.dynamic_agents;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto it = inputs.find(static_cast<int>(i));
    std::optional<ExternalInput> in;
    if (it != inputs.end()) in = it->second;
    if (k == 0) {
      if (auto* ed = std::get_if<ExternalDriver>(&agents[i].driver); ed && in) {
        ed->target = in->target;
        ed->last_input_time = in->stamp;
      }
      continue;
    }
    agents[i] = advance_driver(agents[i], t, sc.tau, in);
  }

  const std::vector<AgentCapsule> caps = world_.environment.agent_capsules();
  const int n = sc.chain.dof();
  const JerkCommand u_nom = coordinator_.fetch(n);
  const std::uint64_t epoch = coordinator_.epoch();

  SafeControlOutcome out;
  switch (sc.mode) {
    case SafeguardMode::kJssa:
      out = jssa_step(u_nom, sc.chain, world_.robot, caps, sc.params, sc.bounds, sc.V, sc.tau);
      break;
    case SafeguardMode::kSsa:
      out = ssa_step(u_nom, sc.chain, world_.robot, caps, SsaParams{sc.params.d_min, sc.params.lambda1, sc.params.eta_gain},
                     sc.bounds, sc.tau);
      break;
    case SafeguardMode::kOff:
      out = observe_only(u_nom, sc.chain, world_.robot, caps, sc.params);
      break;
  }

  StepRecord r;
  r.step = k;
  r.t = t;
  r.d = out.d;
  r.d_dot = out.d_dot;
  r.d_ddot = out.d_ddot;
  r.phi = out.phi;
  r.S = out.constraint.S;
  r.lu = out.lu;
  r.active = out.active;
  r.fallback = out.fallback_used;
  r.preclip_violation = out.preclip_violation;
  r.robot_link = out.robot_capsule + 1;
  r.agent_id = out.agent_index;
  r.agent_link = out.agent_capsule + 1;
  r.relative_speed = out.relative_speed;
  r.relative_accel = out.relative_accel;
  r.epoch = epoch;
  r.u_nom = u_nom;
  r.u_safe = out.u_safe;
  r.theta = world_.robot.theta;

  world_.robot = step_joint_state(world_.robot, out.u_safe, sc.tau);
  world_.step = k + 1;
  world_.t = static_cast<double>(k + 1) * sc.tau;
  coordinator_.after_step(k, out.active, world_.robot);
  log_.push_back(std::move(r));
  return log_.back();
}

RunResult run(const Scenario& scenario) {
  Simulation sim(scenario);
  while (!sim.finished()) sim.step();
  RunResult result;
  result.log = sim.log();
  result.metrics = compute_metrics(result.log, scenario.tau, sim.scenario().params.d_min, scenario.bounds);
  result.replans = sim.coordinator().events();
  return result;
}

std::vector<SweepRow> sweep(const Scenario& base, const std::vector<double>& lambda1s,
                            const std::vector<double>& lambda2s) {
  if (lambda1s.empty() || lambda2s.empty()) throw ConfigError("sweep grid is empty");
  std::vector<SweepRow> rows;
  for (double l1 : lambda1s) {
    for (double l2 : lambda2s) {
      Scenario s = base;
      s.params.lambda1 = l1;
      s.params.lambda2 = l2;
      rows.push_back(SweepRow{l1, l2, run(s).metrics});
    }
  }
  return rows;
}

ModeComparison compare_modes(const Scenario& scenario) {
  Scenario a = scenario;
  a.mode = SafeguardMode::kJssa;
  Scenario b = scenario;
  b.mode = SafeguardMode::kSsa;
  return ModeComparison{run(a), run(b)};
}

}  // namespace jssa
