#include "jssa/telemetry.hpp"

#include <charconv>
#include <ostream>

namespace jssa {

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::string optional_number(const std::optional<double>& x) { return x ? format_number(*x) : "none"; }

}  // namespace

void write_telemetry_csv(std::ostream& out, const std::vector<StepRecord>& log) {
  const Eigen::Index n = log.empty() ? 0 : log.front().theta.size();
  out << "t,d,d_dot,d_ddot,phi,S,Lu,active,fallback,preclip_violation,robot_link,agent_link,rel_speed,rel_accel";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",u_nom_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",u_safe_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",theta_" << i;
  out << '\n';
  for (const auto& r : log) {
    out << format_number(r.t) << ',' << format_number(r.d) << ',' << format_number(r.d_dot) << ','
        << format_number(r.d_ddot) << ',' << format_number(r.phi) << ',' << format_number(r.S) << ','
        << format_number(r.lu) << ',' << (r.active ? 1 : 0) << ',' << to_string(r.fallback) << ','
        << (r.preclip_violation ? 1 : 0) << ',' << r.robot_link << ',' << r.agent_link << ','
        << format_number(r.relative_speed) << ',' << format_number(r.relative_accel);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_number(r.u_nom[i]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_number(r.u_safe[i]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_number(r.theta[i]);
    out << '\n';
  }
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "lambda1,lambda2,min_distance,first_trigger,last_trigger,active_duration,mean_critical_velocity,"
         "mean_critical_acceleration,mean_active_velocity,mean_active_acceleration,steps,active_steps,"
         "violations,fallback_steps,preclip_violations,bound_violations\n";
  for (const auto& row : rows) {
    const RunMetrics& m = row.metrics;
    out << optional_number(row.lambda1) << ',' << optional_number(row.lambda2) << ','
        << format_number(m.min_distance) << ',' << optional_number(m.first_trigger) << ','
        << optional_number(m.last_trigger) << ',' << format_number(m.active_duration) << ','
        << format_number(m.mean_critical_velocity) << ',' << format_number(m.mean_critical_acceleration) << ','
        << format_number(m.mean_active_velocity) << ',' << format_number(m.mean_active_acceleration) << ','
        << m.steps << ',' << m.active_steps << ',' << m.violations << ',' << m.fallback_steps << ','
        << m.preclip_violations << ',' << m.bound_violations << '\n';
  }
}

}  // namespace jssa
