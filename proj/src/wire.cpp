#include "jssa/wire.hpp"

#include <initializer_list>

#include "jssa/errors.hpp"

namespace jssa::wire {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError("wire: " + what); }

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = key == "kind" || key == "seq";
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) fail("unknown field '" + key + "'");
  }
}

const Json& field(const Json& j, const char* key) {
  if (!j.contains(key)) fail(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

std::optional<double> optional_number(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return number(j, key);
}

int integer(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

std::size_t count(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_unsigned()) fail(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

bool boolean(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_boolean()) fail(std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

std::string string(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::array<double, 3> triple(const Json& v, const char* key) {
  if (!v.is_array() || v.size() != 3) fail(std::string("field '") + key + "' must hold three numbers");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) fail(std::string("field '") + key + "' must hold three numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

std::string_view op_name(ScenarioOp op) {
  switch (op) {
    case ScenarioOp::kStart:
      return "start";
    case ScenarioOp::kPause:
      return "pause";
    case ScenarioOp::kReset:
      return "reset";
    case ScenarioOp::kLoad:
      return "load";
  }
  return "start";
}

ScenarioOp parse_op(const std::string& s) {
  if (s == "start") return ScenarioOp::kStart;
  if (s == "pause") return ScenarioOp::kPause;
  if (s == "reset") return ScenarioOp::kReset;
  if (s == "load") return ScenarioOp::kLoad;
  fail("unknown scenario op '" + s + "'");
}

void put(Json& j, const State& s) {
  Json caps = Json::array();
  for (const auto& c : s.capsules) {
    caps.push_back(Json{{"p0", c.p0}, {"p1", c.p1}, {"r", c.r}, {"owner", c.owner}, {"link", c.link}});
  }
  j["t"] = s.t;
  j["theta"] = s.theta;
  j["capsules"] = caps;
  j["d"] = s.d;
  j["phi"] = s.phi;
  j["active"] = s.active;
  j["robot_link"] = s.robot_link;
  j["agent_link"] = s.agent_link;
  j["params"] = Json{{"lambda1", s.params.lambda1}, {"lambda2", s.params.lambda2}, {"d_min", s.params.d_min}};
  j["running"] = s.running;
}

void put(Json& j, const Metrics& m) {
  const RunMetrics& r = m.metrics;
  j["min_distance"] = r.min_distance;
  j["first_trigger"] = optional_json(r.first_trigger);
  j["last_trigger"] = optional_json(r.last_trigger);
  j["active_duration"] = r.active_duration;
  j["mean_critical_velocity"] = r.mean_critical_velocity;
  j["mean_critical_acceleration"] = r.mean_critical_acceleration;
  j["mean_active_velocity"] = r.mean_active_velocity;
  j["mean_active_acceleration"] = r.mean_active_acceleration;
  j["steps"] = r.steps;
  j["active_steps"] = r.active_steps;
  j["violations"] = r.violations;
  j["fallback_steps"] = r.fallback_steps;
  j["preclip_violations"] = r.preclip_violations;
  j["bound_violations"] = r.bound_violations;
}

void put(Json& j, const Control& c) {
  j["target_xyz"] = c.target_xyz;
  j["agent_id"] = c.agent_id;
}

void put(Json& j, const ParamUpdate& p) {
  if (p.lambda1) j["lambda1"] = *p.lambda1;
  if (p.lambda2) j["lambda2"] = *p.lambda2;
  if (p.d_min) j["d_min"] = *p.d_min;
}

void put(Json& j, const ScenarioCmd& c) {
  j["op"] = op_name(c.op);
  if (c.scenario) j["scenario"] = *c.scenario;
}

void put(Json& j, const ErrorMsg& e) {
  j["code"] = e.code;
  j["detail"] = e.detail;
}

State get_state(const Json& j) {
  check_keys(j, {"t", "theta", "capsules", "d", "phi", "active", "robot_link", "agent_link", "params", "running"});
  State s;
  s.t = number(j, "t");
  const Json& th = field(j, "theta");
  if (!th.is_array()) fail("field 'theta' must be an array");
  for (const auto& x : th) {
    if (!x.is_number()) fail("field 'theta' must hold numbers");
    s.theta.push_back(x.get<double>());
  }
  const Json& caps = field(j, "capsules");
  if (!caps.is_array()) fail("field 'capsules' must be an array");
  for (const auto& c : caps) {
    if (!c.is_object()) fail("capsule entries must be objects");
    WireCapsule w;
    w.p0 = triple(field(c, "p0"), "p0");
    w.p1 = triple(field(c, "p1"), "p1");
    w.r = number(c, "r");
    w.owner = string(c, "owner");
    w.link = integer(c, "link");
    s.capsules.push_back(std::move(w));
  }
  s.d = number(j, "d");
  s.phi = number(j, "phi");
  s.active = boolean(j, "active");
  s.robot_link = integer(j, "robot_link");
  s.agent_link = integer(j, "agent_link");
  if (j.contains("params")) {
    const Json& p = j.at("params");
    if (!p.is_object()) fail("field 'params' must be an object");
    s.params = LiveParams{number(p, "lambda1"), number(p, "lambda2"), number(p, "d_min")};
  }
  if (j.contains("running")) s.running = boolean(j, "running");
  return s;
}

Metrics get_metrics(const Json& j) {
  check_keys(j, {"min_distance", "first_trigger", "last_trigger", "active_duration", "mean_critical_velocity",
                 "mean_critical_acceleration", "mean_active_velocity", "mean_active_acceleration", "steps",
                 "active_steps", "violations", "fallback_steps", "preclip_violations", "bound_violations"});
  RunMetrics r;
  r.min_distance = number(j, "min_distance");
  r.first_trigger = optional_number(j, "first_trigger");
  r.last_trigger = optional_number(j, "last_trigger");
  r.active_duration = number(j, "active_duration");
  r.mean_critical_velocity = number(j, "mean_critical_velocity");
  r.mean_critical_acceleration = number(j, "mean_critical_acceleration");
  r.mean_active_velocity = number(j, "mean_active_velocity");
  r.mean_active_acceleration = number(j, "mean_active_acceleration");
  r.steps = count(j, "steps");
  r.active_steps = count(j, "active_steps");
  r.violations = count(j, "violations");
  r.fallback_steps = count(j, "fallback_steps");
  r.preclip_violations = count(j, "preclip_violations");
  r.bound_violations = count(j, "bound_violations");
  return Metrics{r};
}

Control get_control(const Json& j) {
  check_keys(j, {"target_xyz", "agent_id"});
  Control c;
  c.target_xyz = triple(field(j, "target_xyz"), "target_xyz");
  c.agent_id = integer(j, "agent_id");
  if (c.agent_id < 0) fail("field 'agent_id' must be non-negative");
  return c;
}

ParamUpdate get_param_update(const Json& j) {
  check_keys(j, {"lambda1", "lambda2", "d_min"});
  ParamUpdate p;
  p.lambda1 = optional_number(j, "lambda1");
  p.lambda2 = optional_number(j, "lambda2");
  p.d_min = optional_number(j, "d_min");
  return p;
}

ScenarioCmd get_scenario_cmd(const Json& j) {
  check_keys(j, {"op", "scenario"});
  ScenarioCmd c;
  c.op = parse_op(string(j, "op"));
  if (j.contains("scenario") && !j.at("scenario").is_null()) {
    const Json& s = j.at("scenario");
    if (!s.is_object() && !s.is_string()) fail("field 'scenario' must be an object or a path");
    c.scenario = s;
  }
  if (c.op == ScenarioOp::kLoad && !c.scenario) fail("load requires a scenario");
  return c;
}

ErrorMsg get_error(const Json& j) {
  check_keys(j, {"code", "detail"});
  return ErrorMsg{string(j, "code"), string(j, "detail")};
}

}  // namespace

std::string_view kind_name(const Payload& p) {
  struct Visitor {
    std::string_view operator()(const State&) const { return "state"; }
    std::string_view operator()(const Metrics&) const { return "metrics"; }
    std::string_view operator()(const Control&) const { return "control"; }
    std::string_view operator()(const ScenarioCmd&) const { return "scenario_cmd"; }
    std::string_view operator()(const ParamUpdate&) const { return "param_update"; }
    std::string_view operator()(const ErrorMsg&) const { return "error"; }
  };
  return std::visit(Visitor{}, p);
}

Json to_json(const Message& m) {
  Json j = Json::object();
  j["kind"] = kind_name(m.payload);
  j["seq"] = m.seq;
  std::visit([&](const auto& p) { put(j, p); }, m.payload);
  return j;
}

std::string serialize(const Message& m) { return to_json(m).dump(); }

Message from_json(const Json& j) {
  if (!j.is_object()) fail("message must be a JSON object");
  const std::string kind = string(j, "kind");
  Message m;
  m.seq = count(j, "seq");
  if (kind == "state") {
    m.payload = get_state(j);
  } else if (kind == "metrics") {
    m.payload = get_metrics(j);
  } else if (kind == "control") {
    m.payload = get_control(j);
  } else if (kind == "scenario_cmd") {
    m.payload = get_scenario_cmd(j);
  } else if (kind == "param_update") {
    m.payload = get_param_update(j);
  } else if (kind == "error") {
    m.payload = get_error(j);
  } else {
    fail("unknown kind '" + kind + "'");
  }
  return m;
}

Message parse(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace jssa::wire
