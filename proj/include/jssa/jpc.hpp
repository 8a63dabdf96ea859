#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "jssa/kinematics.hpp"

namespace jssa {

/// Joint-space waypoints visited every `sample_time` seconds.
struct Task {
  std::vector<VecX> waypoints;
  double sample_time = 1.0;

  void validate(int dof, double tau) const;
};

enum class BufferKind { kHold, kTask, kInternal };

struct CommandBuffer {
  std::vector<JerkCommand> commands;
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;
  BufferKind kind = BufferKind::kHold;
  /// Waypoints tracked by a task buffer and the step count at which each is reached.
  std::vector<VecX> waypoints;
  std::vector<std::size_t> waypoint_steps;
  double sample_time = 0.0;

  std::size_t size() const { return commands.size(); }
  bool exhausted() const { return cursor >= commands.size(); }
  /// Waypoints not yet reached at the cursor; the final waypoint is always kept.
  std::optional<Task> remaining_task() const;
};

/// Pops the command at the cursor; an exhausted buffer yields zero jerk.
JerkCommand next_command(CommandBuffer& buffer, int dof);

/// Swaps in `replacement` with a fresh epoch and a reset cursor.
void replace_buffer(CommandBuffer& current, CommandBuffer replacement);

struct GenerateOptions {
  int max_rescales = 200;
};

/// Per joint and segment, the jerk is quadratic in time (a quintic in position) and solved so the
/// discrete integration lands exactly on (P_i, v_i, 0). Interior velocities are slope averages
/// (zero when the neighbouring slopes disagree in sign) and the path ends at rest. Segments are
/// stretched uniformly by (max ratio)^(1/3) until every sample lies within the bounds.
CommandBuffer generate(const Task& task, const JointState& initial, const JerkBounds& bounds,
                       double tau, const GenerateOptions& options = {});

/// Shortest per-joint bounded jerk profile driving (theta_dot, theta_ddot) to (0, 0).
CommandBuffer internal_replan(const JointState& q, const JerkBounds& bounds, double tau);

/// Minimal step count for a single joint to reach rest, with the matching jerk sequence.
std::vector<double> joint_rest_profile(double v, double a, double lower, double upper, double tau);

/// New task buffer from the current state through the remaining waypoints.
CommandBuffer host_replan(const Task& task_remaining, const JointState& q, const JerkBounds& bounds,
                          double tau);

enum class ReplanKind { kInternal, kHost };

struct ReplanEvent {
  ReplanKind kind = ReplanKind::kInternal;
  double time = 0.0;
  std::uint64_t epoch = 0;
  std::size_t step = 0;
  bool delivered = false;
};

struct ReplanConfig {
  int debounce_steps = 5;
  double host_latency = 0.0;
};

/// Owns the active buffer and runs the safeguard-driven replan cycle. Replacement happens only
/// inside `after_step`, i.e. between control steps.
class ReplanCoordinator {
 public:
  ReplanCoordinator(CommandBuffer initial, const JerkBounds& bounds, double tau, ReplanConfig config);

  /// Command for the current step and the epoch it belongs to.
  JerkCommand fetch(int dof);
  std::uint64_t epoch() const { return buffer_.epoch; }
  const CommandBuffer& buffer() const { return buffer_; }

  /// Feeds the safeguard activity of the finished step `step` and the resulting state.
  void after_step(std::size_t step, bool safeguard_active, const JointState& q);

  const std::vector<ReplanEvent>& events() const { return events_; }
  bool host_pending() const { return pending_.has_value(); }
  const std::optional<Task>& remaining_task() const { return remaining_; }

 private:
  struct Pending {
    std::size_t due_step = 0;
    std::uint64_t issued_epoch = 0;
    std::size_t event_index = 0;
  };

  CommandBuffer buffer_;
  JerkBounds bounds_;
  double tau_;
  ReplanConfig config_;
  std::uint64_t next_epoch_;
  bool in_episode_ = false;
  int inactive_steps_ = 0;
  std::optional<Task> remaining_;
  std::optional<Pending> pending_;
  std::vector<ReplanEvent> events_;
};

/// Integrates a jerk sequence from `initial`.
std::vector<JointState> rollout(const JointState& initial, const std::vector<JerkCommand>& commands,
                                double tau);

}  // namespace jssa
