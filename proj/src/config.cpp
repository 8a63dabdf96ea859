#include "jssa/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jssa/errors.hpp"
#include "jssa/scenarios.hpp"

namespace jssa {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(where, std::string("missing key '") + key + "'");
  return obj.at(key);
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

double number_or(const Json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return number(obj.at(key), where + "." + key);
}

VecX vector(const Json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  VecX out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = number(v[i], where);
  return out;
}

Vec3 vec3(const Json& v, const std::string& where) {
  const VecX x = vector(v, where);
  if (x.size() != 3) fail(where, "expected three numbers");
  return Vec3(x[0], x[1], x[2]);
}

std::string text(const Json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) fail(where, "unknown key '" + key + "'");
  }
}

Iso3 pose(const Json& obj, const char* xyz_key, const char* rpy_key, const std::string& where) {
  Iso3 T = Iso3::Identity();
  if (obj.contains(xyz_key)) T.translation() = vec3(obj.at(xyz_key), where + "." + xyz_key);
  if (obj.contains(rpy_key)) {
    const Vec3 rpy = vec3(obj.at(rpy_key), where + "." + rpy_key) * kDegToRad;
    T.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                  Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                     .toRotationMatrix();
  }
  return T;
}

KinematicChain chain_from_json(const Json& doc) {
  const std::string where = "robot";
  check_keys(doc, {"model", "base_xyz", "base_rpy_deg", "joints", "capsules"}, where);
  const Iso3 base = pose(doc, "base_xyz", "base_rpy_deg", where);
  const std::string model = doc.contains("model") ? text(doc.at("model"), where + ".model") : "custom";
  if (model == "default") {
    if (doc.contains("joints") || doc.contains("capsules")) fail(where, "the default model takes no joints or capsules");
    return make_default_arm(base);
  }
  if (model != "custom") fail(where, "unknown model '" + model + "'");
  std::vector<JointSpec> joints;
  const Json& js = require(doc, "joints", where);
  if (!js.is_array() || js.empty()) fail(where + ".joints", "expected a non-empty array");
  for (std::size_t i = 0; i < js.size(); ++i) {
    const std::string w = where + ".joints[" + std::to_string(i) + "]";
    check_keys(js[i], {"origin_xyz", "origin_rpy_deg", "axis", "limits_deg"}, w);
    JointSpec j;
    j.origin = pose(js[i], "origin_xyz", "origin_rpy_deg", w);
    j.axis = vec3(require(js[i], "axis", w), w + ".axis");
    if (js[i].contains("limits_deg")) {
      const VecX lim = vector(js[i].at("limits_deg"), w + ".limits_deg");
      if (lim.size() != 2 || !(lim[0] < lim[1])) fail(w + ".limits_deg", "expected [lower, upper]");
      j.lower = lim[0] * kDegToRad;
      j.upper = lim[1] * kDegToRad;
    }
    joints.push_back(j);
  }
  std::vector<CapsuleAttachment> capsules;
  const Json& cs = require(doc, "capsules", where);
  if (!cs.is_array() || cs.empty()) fail(where + ".capsules", "expected a non-empty array");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const std::string w = where + ".capsules[" + std::to_string(i) + "]";
    check_keys(cs[i], {"name", "frame", "p0", "p1", "radius"}, w);
    CapsuleAttachment c;
    if (cs[i].contains("name")) c.name = text(cs[i].at("name"), w + ".name");
    const Json& f = require(cs[i], "frame", w);
    if (!f.is_number_integer()) fail(w + ".frame", "expected an integer");
    c.frame = f.get<int>();
    c.p0 = vec3(require(cs[i], "p0", w), w + ".p0");
    c.p1 = vec3(require(cs[i], "p1", w), w + ".p1");
    c.radius = number(require(cs[i], "radius", w), w + ".radius");
    if (!(c.radius >= 0.0)) fail(w + ".radius", "must be non-negative");
    capsules.push_back(c);
  }
  try {
    return KinematicChain(std::move(joints), std::move(capsules), base);
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

Skeleton skeleton_from_json(const Json& doc, const std::string& where) {
  if (doc.is_string()) {
    if (doc.get<std::string>() == "human") return Skeleton::human();
    fail(where, "unknown skeleton '" + doc.get<std::string>() + "'");
  }
  check_keys(doc, {"joints", "links"}, where);
  Skeleton s;
  const Json& js = require(doc, "joints", where);
  if (!js.is_array() || js.empty()) fail(where + ".joints", "expected a non-empty array");
  for (std::size_t i = 0; i < js.size(); ++i) {
    const std::string w = where + ".joints[" + std::to_string(i) + "]";
    check_keys(js[i], {"name", "rest"}, w);
    s.joint_names.push_back(text(require(js[i], "name", w), w + ".name"));
    s.rest_points.push_back(vec3(require(js[i], "rest", w), w + ".rest"));
  }
  const Json& ls = require(doc, "links", where);
  if (!ls.is_array() || ls.empty()) fail(where + ".links", "expected a non-empty array");
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const std::string w = where + ".links[" + std::to_string(i) + "]";
    check_keys(ls[i], {"name", "a", "b", "radius"}, w);
    SkeletonLink l;
    if (ls[i].contains("name")) l.name = text(ls[i].at("name"), w + ".name");
    l.joint_a = s.joint_index(text(require(ls[i], "a", w), w + ".a"));
    l.joint_b = s.joint_index(text(require(ls[i], "b", w), w + ".b"));
    if (l.joint_a < 0 || l.joint_b < 0) fail(w, "unknown joint name");
    l.radius = number(require(ls[i], "radius", w), w + ".radius");
    s.links.push_back(l);
  }
  return s;
}

ScriptedTrajectory script_from_json(const Json& doc, const Skeleton& sk, const std::string& where) {
  check_keys(doc, {"interpolation", "keyframes"}, where);
  ScriptedTrajectory script;
  if (doc.contains("interpolation")) {
    const std::string mode = text(doc.at("interpolation"), where + ".interpolation");
    if (mode == "linear") {
      script.interpolation = Interpolation::kLinear;
    } else if (mode == "smooth") {
      script.interpolation = Interpolation::kSmooth;
    } else {
      fail(where + ".interpolation", "expected 'linear' or 'smooth'");
    }
  }
  const Json& ks = require(doc, "keyframes", where);
  if (!ks.is_array() || ks.empty()) fail(where + ".keyframes", "expected a non-empty array");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::string w = where + ".keyframes[" + std::to_string(i) + "]";
    check_keys(ks[i], {"t", "root", "yaw_deg", "offsets"}, w);
    Keyframe k;
    k.t = number(require(ks[i], "t", w), w + ".t");
    k.root = vec3(require(ks[i], "root", w), w + ".root");
    k.yaw = number_or(ks[i], "yaw_deg", 0.0, w) * kDegToRad;
    if (ks[i].contains("offsets")) {
      const Json& off = ks[i].at("offsets");
      if (!off.is_object()) fail(w + ".offsets", "expected an object of joint name -> [x, y, z]");
      for (const auto& [name, value] : off.items()) {
        const int j = sk.joint_index(name);
        if (j < 0) fail(w + ".offsets", "unknown joint '" + name + "'");
        k.offsets.emplace_back(j, vec3(value, w + ".offsets." + name));
      }
    }
    script.keyframes.push_back(std::move(k));
  }
  try {
    script.validate();
  } catch (const ConfigError& e) {
    fail(where, e.what());
  }
  return script;
}

Environment environment_from_json(const Json& doc) {
  const std::string where = "agents";
  check_keys(doc, {"static", "dynamic"}, where);
  Environment env;
  if (doc.contains("static")) {
    const Json& ss = doc.at("static");
    if (!ss.is_array()) fail(where + ".static", "expected an array");
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const std::string w = where + ".static[" + std::to_string(i) + "]";
      check_keys(ss[i], {"label", "capsules"}, w);
      StaticAgent a;
      if (ss[i].contains("label")) a.label = text(ss[i].at("label"), w + ".label");
      const Json& cs = require(ss[i], "capsules", w);
      if (!cs.is_array() || cs.empty()) fail(w + ".capsules", "expected a non-empty array");
      for (std::size_t c = 0; c < cs.size(); ++c) {
        const std::string wc = w + ".capsules[" + std::to_string(c) + "]";
        check_keys(cs[c], {"p0", "p1", "radius"}, wc);
        a.capsules.push_back(Capsule{vec3(require(cs[c], "p0", wc), wc + ".p0"),
                                     vec3(require(cs[c], "p1", wc), wc + ".p1"),
                                     number(require(cs[c], "radius", wc), wc + ".radius")});
      }
      env.static_agents.push_back(std::move(a));
    }
  }
  if (doc.contains("dynamic")) {
    const Json& ds = doc.at("dynamic");
    if (!ds.is_array()) fail(where + ".dynamic", "expected an array");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::string w = where + ".dynamic[" + std::to_string(i) + "]";
      check_keys(ds[i], {"label", "skeleton", "driver", "script", "root", "yaw_deg", "speed_bound",
                         "accel_bound", "velocity_smoothing", "staleness_s"},
                 w);
      const std::string label = ds[i].contains("label") ? text(ds[i].at("label"), w + ".label") : "human";
      const Skeleton sk = ds[i].contains("skeleton") ? skeleton_from_json(ds[i].at("skeleton"), w + ".skeleton")
                                                      : Skeleton::human();
      const std::string driver = text(require(ds[i], "driver", w), w + ".driver");
      DynamicAgent a;
      if (driver == "scripted") {
        a = scripted_human(label, script_from_json(require(ds[i], "script", w), sk, w + ".script"));
      } else if (driver == "external") {
        const Vec3 root = ds[i].contains("root") ? vec3(ds[i].at("root"), w + ".root") : Vec3::Zero();
        a = external_human(label, root, number_or(ds[i], "yaw_deg", 0.0, w) * kDegToRad);
        std::get<ExternalDriver>(a.driver).staleness = number_or(ds[i], "staleness_s", 0.2, w);
      } else {
        fail(w + ".driver", "expected 'scripted' or 'external'");
      }
      a.skeleton = sk;
      a.offsets.assign(sk.rest_points.size(), Vec3::Zero());
      a.speed_bound = number_or(ds[i], "speed_bound", a.speed_bound, w);
      a.accel_bound = number_or(ds[i], "accel_bound", a.accel_bound, w);
      a.velocity_smoothing = number_or(ds[i], "velocity_smoothing", a.velocity_smoothing, w);
      if (!(a.speed_bound > 0.0) || !(a.accel_bound > 0.0)) fail(w, "speed and acceleration bounds must be positive");
      env.dynamic_agents.push_back(std::move(a));
    }
  }
  return env;
}

SafetyIndexParams safety_from_json(const Json& doc, SafetyIndexParams p) {
  const std::string where = "safety";
  check_keys(doc, {"d_min", "lambda1", "lambda2", "eta_gain", "form"}, where);
  p.d_min = number_or(doc, "d_min", p.d_min, where);
  p.lambda1 = number_or(doc, "lambda1", p.lambda1, where);
  p.lambda2 = number_or(doc, "lambda2", p.lambda2, where);
  p.eta_gain = number_or(doc, "eta_gain", p.eta_gain, where);
  if (!(p.eta_gain >= 0.0 && p.eta_gain <= 1.0)) fail(where + ".eta_gain", "must lie in [0, 1]");
  if (doc.contains("form")) {
    const std::string f = text(doc.at("form"), where + ".form");
    if (f == "gradient") {
      p.form = ConstraintForm::kGradient;
    } else if (f == "printed") {
      p.form = ConstraintForm::kPrinted;
    } else {
      fail(where + ".form", "expected 'gradient' or 'printed'");
    }
  }
  return p;
}

JerkBounds bounds_from_json(const Json& doc, const std::string& where) {
  try {
    if (doc.is_array()) return JerkBounds::symmetric_degrees(vector(doc, where));
    check_keys(doc, {"lower_deg", "upper_deg"}, where);
    return JerkBounds(vector(require(doc, "lower_deg", where), where + ".lower_deg") * kDegToRad,
                      vector(require(doc, "upper_deg", where), where + ".upper_deg") * kDegToRad);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

VecX configuration_from_json(const Json& doc, const std::string& where) {
  if (doc.is_array()) return vector(doc, where);
  check_keys(doc, {"theta_deg", "theta_rad"}, where);
  if (doc.contains("theta_deg")) return vector(doc.at("theta_deg"), where + ".theta_deg") * kDegToRad;
  return vector(require(doc, "theta_rad", where), where + ".theta_rad");
}

}  // namespace

Task task_from_json(const Json& doc) {
  const std::string where = "task";
  check_keys(doc, {"waypoints", "sample_time_s"}, where);
  Task t;
  const Json& ws = require(doc, "waypoints", where);
  if (!ws.is_array()) fail(where + ".waypoints", "expected an array of joint vectors");
  for (std::size_t i = 0; i < ws.size(); ++i) t.waypoints.push_back(vector(ws[i], where + ".waypoints"));
  t.sample_time = number(require(doc, "sample_time_s", where), where + ".sample_time_s");
  return t;
}

Json task_to_json(const Task& task) {
  Json ws = Json::array();
  for (const auto& w : task.waypoints) ws.push_back(std::vector<double>(w.data(), w.data() + w.size()));
  return Json{{"waypoints", ws}, {"sample_time_s", task.sample_time}};
}

Scenario scenario_from_json(const Json& doc, std::optional<std::uint64_t> seed_override) {
  check_keys(doc, {"name", "family", "seed", "mode", "duration_s", "tau_s", "robot", "initial", "task",
                   "agents", "safety", "bounds_deg", "cost", "replan", "verify_budget"},
             "scenario");
  std::uint64_t seed = 0;
  if (doc.contains("seed")) {
    const Json& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      fail("scenario.seed", "expected a non-negative integer");
    }
    seed = s.get<std::uint64_t>();
  }
  if (seed_override) seed = *seed_override;

  Scenario sc;
  if (doc.contains("family")) {
    sc = make_scenario(text(doc.at("family"), "scenario.family"), seed);
  } else {
    sc.seed = seed;
  }
  if (doc.contains("name")) sc.name = text(doc.at("name"), "scenario.name");
  if (doc.contains("mode")) sc.mode = parse_mode(text(doc.at("mode"), "scenario.mode"));
  sc.duration = number_or(doc, "duration_s", sc.duration, "scenario");
  sc.tau = number_or(doc, "tau_s", sc.tau, "scenario");
  if (doc.contains("robot")) sc.chain = chain_from_json(doc.at("robot"));
  if (doc.contains("initial")) {
    sc.initial = JointState::at_rest(configuration_from_json(doc.at("initial"), "scenario.initial"));
  }
  if (doc.contains("task")) {
    if (doc.at("task").is_null()) {
      sc.task.reset();
    } else {
      sc.task = task_from_json(doc.at("task"));
    }
  }
  if (doc.contains("agents")) sc.environment = environment_from_json(doc.at("agents"));
  if (doc.contains("safety")) sc.params = safety_from_json(doc.at("safety"), sc.params);
  if (doc.contains("bounds_deg")) sc.bounds = bounds_from_json(doc.at("bounds_deg"), "scenario.bounds_deg");
  if (doc.contains("cost")) {
    const Json& c = doc.at("cost");
    if (!c.is_array() || c.empty()) fail("scenario.cost", "expected a square matrix");
    Eigen::MatrixXd V(static_cast<Eigen::Index>(c.size()), static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) {
      const VecX row = vector(c[i], "scenario.cost");
      if (row.size() != V.cols()) fail("scenario.cost", "expected a square matrix");
      V.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    try {
      sc.V = CostMatrix(V);
    } catch (const Error& e) {
      fail("scenario.cost", e.what());
    }
  }
  if (doc.contains("replan")) {
    const Json& r = doc.at("replan");
    check_keys(r, {"debounce_steps", "host_latency_s"}, "scenario.replan");
    if (r.contains("debounce_steps")) {
      if (!r.at("debounce_steps").is_number_integer() || r.at("debounce_steps").get<int>() < 0) {
        fail("scenario.replan.debounce_steps", "expected a non-negative integer");
      }
      sc.replan.debounce_steps = r.at("debounce_steps").get<int>();
    }
    sc.replan.host_latency = number_or(r, "host_latency_s", sc.replan.host_latency, "scenario.replan");
    if (!(sc.replan.host_latency >= 0.0)) fail("scenario.replan.host_latency_s", "must be non-negative");
  }
  if (doc.contains("verify_budget")) {
    const Json& b = doc.at("verify_budget");
    if (!b.is_number_integer() || b.get<std::int64_t>() < 0) fail("scenario.verify_budget", "expected a non-negative integer");
    sc.verify_budget = b.get<std::size_t>();
  }
  try {
    sc.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

Scenario parse_scenario(std::string_view text_doc, std::optional<std::uint64_t> seed_override) {
  Json doc;
  try {
    doc = Json::parse(text_doc);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("JSON parse error: ") + e.what());
  }
  return scenario_from_json(doc, seed_override);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  return parse_scenario(read_text_file(path), seed_override);
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* v = std::getenv("JSSA_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  std::uint64_t seed = 0;
  const std::string_view s(v);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("JSSA_SEED must be an unsigned integer");
  return seed;
}

VerifyRequest verify_request_from_json(const Json& doc) {
  const std::string where = "verify";
  check_keys(doc, {"lambda1", "lambda2", "d_min", "bounds_deg", "budget", "seed", "robot", "d_max",
                   "relative_speed", "relative_accel", "joint_speed", "joint_accel", "capsules", "strata"},
             where);
  VerifyRequest r;
  r.params.lambda1 = number(require(doc, "lambda1", where), where + ".lambda1");
  r.params.lambda2 = number(require(doc, "lambda2", where), where + ".lambda2");
  r.params.d_min = number_or(doc, "d_min", r.params.d_min, where);
  if (!(r.params.d_min > 0.0)) fail(where + ".d_min", "must be positive");
  r.bounds = doc.contains("bounds_deg") ? bounds_from_json(doc.at("bounds_deg"), where + ".bounds_deg")
                                        : default_jerk_bounds();
  r.chain = doc.contains("robot") ? chain_from_json(doc.at("robot")) : make_default_arm();
  if (r.bounds.dof() != r.chain.dof()) fail(where + ".bounds_deg", "size does not match the robot");
  auto count = [&](const char* key, auto fallback) {
    if (!doc.contains(key)) return fallback;
    const Json& v = doc.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(where + "." + key, "expected a non-negative integer");
    return v.get<decltype(fallback)>();
  };
  r.minimax.budget = count("budget", r.minimax.budget);
  r.minimax.seed = count("seed", r.minimax.seed);
  r.minimax.strata = count("strata", r.minimax.strata);
  r.minimax.d_max = number_or(doc, "d_max", r.minimax.d_max, where);
  r.minimax.relative_speed = number_or(doc, "relative_speed", r.minimax.relative_speed, where);
  r.minimax.relative_accel = number_or(doc, "relative_accel", r.minimax.relative_accel, where);
  r.minimax.joint_speed = number_or(doc, "joint_speed", r.minimax.joint_speed, where);
  r.minimax.joint_accel = number_or(doc, "joint_accel", r.minimax.joint_accel, where);
  if (doc.contains("capsules")) {
    const Json& cs = doc.at("capsules");
    if (!cs.is_array()) fail(where + ".capsules", "expected an array of capsule indices");
    for (const auto& c : cs) {
      if (!c.is_number_integer()) fail(where + ".capsules", "expected an array of capsule indices");
      r.minimax.capsules.push_back(c.get<int>());
    }
  }
  return r;
}

VerifyRequest load_verify_request(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("JSON parse error: ") + e.what());
  }
  return verify_request_from_json(doc);
}

}  // namespace jssa
