#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "jssa/sim.hpp"

namespace jssa::wire {

using Json = nlohmann::json;

struct WireCapsule {
  std::array<double, 3> p0{};
  std::array<double, 3> p1{};
  double r = 0.0;
  /// "robot" or "agent:<index>".
  std::string owner;
  /// 1-based link id, as in robot_link / agent_link.
  int link = 0;
  bool operator==(const WireCapsule&) const = default;
};

struct LiveParams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double d_min = 0.0;
  bool operator==(const LiveParams&) const = default;
};

struct State {
  double t = 0.0;
  std::vector<double> theta;
  std::vector<WireCapsule> capsules;
  double d = 0.0;
  double phi = 0.0;
  bool active = false;
  int robot_link = 0;
  int agent_link = 0;
  /// Parameters in force for the step that produced this state.
  LiveParams params;
  bool running = false;
  bool operator==(const State&) const = default;
};

struct Control {
  std::array<double, 3> target_xyz{};
  int agent_id = 0;
  bool operator==(const Control&) const = default;
};

struct ParamUpdate {
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  std::optional<double> d_min;
  bool operator==(const ParamUpdate&) const = default;
};

enum class ScenarioOp { kStart, kPause, kReset, kLoad };

struct ScenarioCmd {
  ScenarioOp op = ScenarioOp::kStart;
  /// Inline scenario document or a file path (string); used by load.
  std::optional<Json> scenario;
  bool operator==(const ScenarioCmd&) const = default;
};

struct Metrics {
  RunMetrics metrics;
  bool operator==(const Metrics&) const = default;
};

struct ErrorMsg {
  std::string code;
  std::string detail;
  bool operator==(const ErrorMsg&) const = default;
};

using Payload = std::variant<State, Metrics, Control, ScenarioCmd, ParamUpdate, ErrorMsg>;

struct Message {
  std::uint64_t seq = 0;
  Payload payload;
  bool operator==(const Message&) const = default;
};

/// state, metrics, control, scenario_cmd, param_update or error.
std::string_view kind_name(const Payload& p);

/// Flat JSON object: {"kind": ..., "seq": ..., <payload fields>}.
Json to_json(const Message& m);
std::string serialize(const Message& m);

/// Throws ConfigError with a description of the first schema violation.
Message from_json(const Json& j);
Message parse(std::string_view text);

}  // namespace jssa::wire
