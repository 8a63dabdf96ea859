#include "jssa/jpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "jssa/errors.hpp"

namespace jssa {

namespace {

constexpr std::size_t kMaxRestSteps = 1000000;

double slope_average(double left, double right) {
  if (left == 0.0 || right == 0.0 || (left > 0.0) != (right > 0.0)) return 0.0;
  return 0.5 * (left + right);
}

// Coefficients of u_k = c0 + c1 s + c2 s^2, s = (k + 1/2) / K, landing on (p, v, 0) after K steps.
Eigen::Vector3d segment_coefficients(double p0, double v0, double a0, double p1, double v1,
                                     std::size_t K, double tau) {
  const double kt = static_cast<double>(K) * tau;
  const Eigen::Vector3d free(p0 + kt * v0 + 0.5 * kt * kt * a0, v0 + kt * a0, a0);
  const Eigen::Vector3d target(p1, v1, 0.0);

  // Rows: position, velocity, acceleration responses per unit coefficient (in units of tau).
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  const double dk = static_cast<double>(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double s = (static_cast<double>(k) + 0.5) / dk;
    const double m = static_cast<double>(K - k - 1);
    const double basis[3] = {1.0, s, s * s};
    for (int j = 0; j < 3; ++j) {
      M(0, j) += (1.0 / 6.0 + 0.5 * m + 0.5 * m * m) * basis[j];
      M(1, j) += (m + 0.5) * basis[j];
      M(2, j) += basis[j];
    }
  }
  Eigen::Vector3d rhs = target - free;
  rhs[0] /= tau * tau * tau;
  rhs[1] /= tau * tau;
  rhs[2] /= tau;
  return M.fullPivLu().solve(rhs);
}

struct Built {
  std::vector<JerkCommand> commands;
  std::vector<std::size_t> steps;
};

Built build_buffer(const Task& task, const JointState& initial, const std::vector<std::size_t>& ks,
                   double tau) {
  const int n = initial.dof();
  const std::size_t N = task.waypoints.size();
  Built out;
  JointState q = initial;
  std::size_t total = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const VecX& target = task.waypoints[i];
    const VecX& start = i == 0 ? initial.theta : task.waypoints[i - 1];
    VecX v_end = VecX::Zero(n);
    if (i + 1 < N) {
      const double t_in = static_cast<double>(ks[i]) * tau;
      const double t_out = static_cast<double>(ks[i + 1]) * tau;
      for (int j = 0; j < n; ++j) {
        v_end[j] = slope_average((target[j] - start[j]) / t_in,
                                 (task.waypoints[i + 1][j] - target[j]) / t_out);
      }
    }
    const std::size_t K = ks[i];
    Eigen::MatrixXd coeff(3, n);
    for (int j = 0; j < n; ++j) {
      coeff.col(j) = segment_coefficients(q.theta[j], q.theta_dot[j], q.theta_ddot[j], target[j],
                                          v_end[j], K, tau);
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double s = (static_cast<double>(k) + 0.5) / static_cast<double>(K);
      JerkCommand u = coeff.row(0).transpose() + s * coeff.row(1).transpose() +
                      (s * s) * coeff.row(2).transpose();
      q = step_joint_state(q, u, tau);
      out.commands.push_back(std::move(u));
    }
    total += K;
    out.steps.push_back(total);
  }
  return out;
}

double excess_ratio(const std::vector<JerkCommand>& commands, const JerkBounds& bounds) {
  double worst = 0.0;
  for (const auto& u : commands) {
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      const double lim = u[j] >= 0.0 ? bounds.upper[j] : -bounds.lower[j];
      const double mag = std::abs(u[j]);
      if (mag == 0.0) continue;
      if (lim <= 0.0) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, mag / lim);
    }
  }
  return worst;
}

}  // namespace

void Task::validate(int dof, double tau) const {
  if (waypoints.empty()) throw TaskInfeasible("task has no waypoints");
  if (!(sample_time > 0.0) || !std::isfinite(sample_time)) {
    throw TaskInfeasible("task sample time must be positive");
  }
  if (!(tau > 0.0)) throw Error("tau must be positive");
  const double ratio = sample_time / tau;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw TaskInfeasible("task sample time must be a multiple of the control period");
  }
  for (const auto& w : waypoints) {
    if (w.size() != dof) throw DimensionError("waypoint dimension does not match the robot");
    if (!w.allFinite()) throw NonFiniteError("waypoint contains non-finite entries");
  }
}

std::optional<Task> CommandBuffer::remaining_task() const {
  if (kind != BufferKind::kTask || waypoints.empty()) return std::nullopt;
  Task t;
  t.sample_time = sample_time;
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (waypoint_steps[i] > cursor) t.waypoints.push_back(waypoints[i]);
  }
  if (t.waypoints.empty()) t.waypoints.push_back(waypoints.back());
  return t;
}

JerkCommand next_command(CommandBuffer& buffer, int dof) {
  if (buffer.exhausted()) return JerkCommand::Zero(dof);
  return buffer.commands[buffer.cursor++];
}

void replace_buffer(CommandBuffer& current, CommandBuffer replacement) {
  const std::uint64_t epoch = current.epoch + 1;
  current = std::move(replacement);
  current.epoch = epoch;
  current.cursor = 0;
}

CommandBuffer generate(const Task& task, const JointState& initial, const JerkBounds& bounds,
                       double tau, const GenerateOptions& options) {
  initial.validate();
  task.validate(initial.dof(), tau);
  if (bounds.dof() != initial.dof()) throw DimensionError("bounds do not match the robot");

  const auto base = static_cast<std::size_t>(std::llround(task.sample_time / tau));
  std::vector<std::size_t> ks(task.waypoints.size(), base);
  for (int attempt = 0; attempt <= options.max_rescales; ++attempt) {
    Built built = build_buffer(task, initial, ks, tau);
    const double ratio = excess_ratio(built.commands, bounds);
    if (!std::isfinite(ratio)) break;
    bool compliant = true;
    for (const auto& u : built.commands) {
      if (!bounds.contains(u)) {
        compliant = false;
        break;
      }
    }
    if (compliant) {
      CommandBuffer buffer;
      buffer.commands = std::move(built.commands);
      buffer.waypoint_steps = std::move(built.steps);
      buffer.waypoints = task.waypoints;
      buffer.sample_time = task.sample_time;
      buffer.kind = BufferKind::kTask;
      return buffer;
    }
    const double factor = std::cbrt(std::max(ratio, 1.0));
    for (auto& k : ks) {
      k = std::max(k + 1, static_cast<std::size_t>(std::ceil(static_cast<double>(k) * factor)));
    }
  }
  throw TaskInfeasible("no jerk-bounded timing found for task");
}

std::vector<double> joint_rest_profile(double v, double a, double lower, double upper, double tau) {
  if (v == 0.0 && a == 0.0) return {};
  const double s = -a / tau;
  const double tol = 1e-12;
  for (std::size_t K = 1; K <= kMaxRestSteps; ++K) {
    const double dk = static_cast<double>(K);
    const double scale = std::max({1.0, std::abs(s), dk * std::max(upper, -lower)});
    if (s < dk * lower - tol * scale || s > dk * upper + tol * scale) continue;

    // Profiles with the required sum that push the weight to the earliest or the latest steps.
    std::vector<double> early(K, lower);
    std::vector<double> late(K, lower);
    double r = std::max(0.0, s - dk * lower);
    double r2 = r;
    for (std::size_t k = 0; k < K && r > 0.0; ++k) {
      const double inc = std::min(upper - lower, r);
      early[k] += inc;
      r -= inc;
    }
    for (std::size_t k = K; k-- > 0 && r2 > 0.0;) {
      const double inc = std::min(upper - lower, r2);
      late[k] += inc;
      r2 -= inc;
    }
    double w_early = 0.0;
    double w_late = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double c = dk - static_cast<double>(k) - 0.5;
      w_early += c * early[k];
      w_late += c * late[k];
    }
    const double w_target = -(v + dk * tau * a) / (tau * tau);
    const double wscale = std::max({1.0, std::abs(w_early), std::abs(w_late), std::abs(w_target)});
    if (w_target > w_early + tol * wscale || w_target < w_late - tol * wscale) continue;

    const double span = w_early - w_late;
    const double lambda = span > 0.0 ? std::clamp((w_target - w_late) / span, 0.0, 1.0) : 0.0;
    std::vector<double> u(K);
    for (std::size_t k = 0; k < K; ++k) {
      u[k] = std::clamp(lambda * early[k] + (1.0 - lambda) * late[k], lower, upper);
    }
    return u;
  }
  throw TaskInfeasible("joint cannot be brought to rest within the bounds");
}

CommandBuffer internal_replan(const JointState& q, const JerkBounds& bounds, double tau) {
  q.validate();
  if (bounds.dof() != q.dof()) throw DimensionError("bounds do not match the robot");
  const int n = q.dof();
  std::vector<std::vector<double>> profiles(static_cast<std::size_t>(n));
  std::size_t K = 0;
  for (int j = 0; j < n; ++j) {
    profiles[static_cast<std::size_t>(j)] =
        joint_rest_profile(q.theta_dot[j], q.theta_ddot[j], bounds.lower[j], bounds.upper[j], tau);
    K = std::max(K, profiles[static_cast<std::size_t>(j)].size());
  }
  CommandBuffer buffer;
  buffer.kind = BufferKind::kInternal;
  buffer.commands.assign(K, JerkCommand::Zero(n));
  for (int j = 0; j < n; ++j) {
    const auto& p = profiles[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < p.size(); ++k) buffer.commands[k][j] = p[k];
  }
  return buffer;
}

CommandBuffer host_replan(const Task& task_remaining, const JointState& q, const JerkBounds& bounds,
                          double tau) {
  return generate(task_remaining, q, bounds, tau);
}

ReplanCoordinator::ReplanCoordinator(CommandBuffer initial, const JerkBounds& bounds, double tau,
                                     ReplanConfig config)
    : buffer_(std::move(initial)),
      bounds_(bounds),
      tau_(tau),
      config_(config),
      next_epoch_(buffer_.epoch + 1) {
  if (config_.debounce_steps < 0) throw ConfigError("debounce must be non-negative");
  if (!(config_.host_latency >= 0.0)) throw ConfigError("host latency must be non-negative");
}

JerkCommand ReplanCoordinator::fetch(int dof) { return next_command(buffer_, dof); }

void ReplanCoordinator::after_step(std::size_t step, bool safeguard_active, const JointState& q) {
  const double t = static_cast<double>(step) * tau_;
  const auto install = [&](CommandBuffer b) {
    b.epoch = next_epoch_++;
    b.cursor = 0;
    buffer_ = std::move(b);
  };

  if (safeguard_active) {
    if (!in_episode_ && buffer_.kind == BufferKind::kTask) remaining_ = buffer_.remaining_task();
    in_episode_ = true;
    inactive_steps_ = 0;
    pending_.reset();
  } else if (in_episode_) {
    ++inactive_steps_;
    if (inactive_steps_ >= config_.debounce_steps) {
      in_episode_ = false;
      inactive_steps_ = 0;
      install(internal_replan(q, bounds_, tau_));
      events_.push_back(ReplanEvent{ReplanKind::kInternal, t, buffer_.epoch, step, true});
      if (remaining_) {
        const auto latency = static_cast<std::size_t>(std::llround(config_.host_latency / tau_));
        events_.push_back(ReplanEvent{ReplanKind::kHost, t, 0, step, false});
        pending_ = Pending{step + latency, buffer_.epoch, events_.size() - 1};
      }
    }
  }

  if (pending_ && step >= pending_->due_step) {
    const Pending p = *pending_;
    pending_.reset();
    if (p.issued_epoch == buffer_.epoch && remaining_) {
      install(host_replan(*remaining_, q, bounds_, tau_));
      events_[p.event_index].delivered = true;
      events_[p.event_index].epoch = buffer_.epoch;
      remaining_.reset();
    }
  }
}

std::vector<JointState> rollout(const JointState& initial, const std::vector<JerkCommand>& commands,
                                double tau) {
  std::vector<JointState> out;
  out.reserve(commands.size() + 1);
  out.push_back(initial);
  for (const auto& u : commands) out.push_back(step_joint_state(out.back(), u, tau));
  return out;
}

}  // namespace jssa
