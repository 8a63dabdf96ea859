#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "jssa/safety_index.hpp"
#include "jssa/sim.hpp"

namespace jssa {

using Json = nlohmann::json;

/// Builds a scenario from a JSON document. A "family" key starts from the shipped scenario of
/// that family (with "seed"); every other key present overrides the corresponding part.
/// `seed_override` replaces the document seed. Throws ConfigError on malformed input.
Scenario scenario_from_json(const Json& doc, std::optional<std::uint64_t> seed_override = {});
Scenario parse_scenario(std::string_view text, std::optional<std::uint64_t> seed_override = {});
Scenario load_scenario(const std::filesystem::path& path,
                       std::optional<std::uint64_t> seed_override = {});

/// Reads JSSA_SEED; nullopt when unset. Throws ConfigError when it is not an unsigned integer.
std::optional<std::uint64_t> seed_from_environment();

/// {waypoints: [[rad...]...], sample_time_s}
Task task_from_json(const Json& doc);
Json task_to_json(const Task& task);

struct VerifyRequest {
  SafetyIndexParams params;
  JerkBounds bounds;
  KinematicChain chain;
  MinimaxConfig minimax;
};

/// {lambda1, lambda2, d_min, bounds_deg?, budget?, seed?, ...minimax sampling ranges}
VerifyRequest verify_request_from_json(const Json& doc);
VerifyRequest load_verify_request(const std::filesystem::path& path);

/// Reads a whole file; throws ConfigError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace jssa
