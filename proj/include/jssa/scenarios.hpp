#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jssa/sim.hpp"

namespace jssa {

/// Names accepted by make_scenario.
const std::vector<std::string>& scenario_families();

/// Standard benchmark scenarios. Seed 0 is the nominal script; other seeds perturb the human
/// script (lateral offset, stopping point, speed, timing) while keeping it within 1.5 m/s.
///   head_on        walks up to the reaching arm, pauses, walks back
///   decelerating   slows down continuously, stops in front of the arm, turns and leaves
///   handover       stands in front of the robot and raises the right hand toward the tool
///   hold           no human in reach; the robot holds its pose
Scenario make_scenario(std::string_view family, std::uint64_t seed);

/// Human-like agent following the given script.
DynamicAgent scripted_human(std::string label, ScriptedTrajectory script);

/// Human steered by external root targets, standing at `root` facing `yaw`.
DynamicAgent external_human(std::string label, const Vec3& root, double yaw);

/// Reaching pose used by the benchmark tasks (rad).
VecX reach_configuration();

}  // namespace jssa
