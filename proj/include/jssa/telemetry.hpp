#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jssa/sim.hpp"

namespace jssa {

/// Shortest round-trip decimal form; identical bytes on every run.
std::string format_number(double x);

/// t, d, d_dot, d_ddot, phi, S, Lu, active, fallback, preclip_violation, robot_link, agent_link,
/// rel_speed, rel_accel, then u_nom_i, u_safe_i and theta_i per joint.
void write_telemetry_csv(std::ostream& out, const std::vector<StepRecord>& log);

struct MetricsRow {
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  RunMetrics metrics;
};

/// The six summary columns first (min distance, first and last trigger, active duration,
/// mean critical velocity and acceleration), then the active-window means and the counters.
/// Missing trigger times are written as "none".
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

}  // namespace jssa
