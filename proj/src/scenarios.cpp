#include "jssa/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "jssa/errors.hpp"

namespace jssa {

namespace {

constexpr double kPi = std::numbers::pi;

VecX degrees(std::initializer_list<double> values) {
  VecX v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x * kDegToRad;
  return v;
}

class Variation {
 public:
  explicit Variation(std::uint64_t seed) : seed_(seed), rng_(seed * 0x9E3779B97F4A7C15ULL + 17) {}
  // Nominal value for seed 0, otherwise uniform in [lo, hi].
  double pick(double nominal, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    const double x = dist(rng_);
    return seed_ == 0 ? nominal : x;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

// Time for a smooth (quintic blend) move of `distance` whose peak speed is `peak`.
double smooth_duration(double distance, double peak) { return 1.875 * std::abs(distance) / peak; }

// The arm stands on a table so that it works at torso height.
constexpr double kTableHeight = 0.7;

Scenario base_scenario(std::string name, std::uint64_t seed) {
  Scenario s;
  Iso3 mount = Iso3::Identity();
  mount.translation() = Vec3(0.0, 0.0, kTableHeight);
  s.chain = make_default_arm(mount);
  s.name = std::move(name);
  s.seed = seed;
  s.initial = JointState::at_rest(reach_configuration());
  s.replan.debounce_steps = 5;
  s.replan.host_latency = 0.1;
  return s;
}

Task back_and_forth(int legs, double sample_time) {
  Task t;
  t.sample_time = sample_time;
  const VecX a = reach_configuration();
  const VecX b = default_home_configuration();
  for (int i = 0; i < legs; ++i) t.waypoints.push_back(i % 2 == 0 ? b : a);
  return t;
}

// Root path along x toward the robot. The walking speed respects the acceleration limit, the
// peak speed, a braking ramp onto the stopping point and a clearance law: the speed toward the
// robot base never exceeds `care` (gap^2 - d_min^2) / lambda, so the human never outruns a
// safety index with that lambda on the parts of the robot that cannot move away.
struct Approach {
  double x_start = 2.8;
  double x_stop = 1.0;
  double y = 0.0;
  double peak = 1.4;
  double accel = 2.0;
  double lambda = 3.0;
  double care = 0.7;
  double delay = 0.3;
  double pause = 0.6;
  bool retreat = true;
};

ScriptedTrajectory approach_script(const Approach& a, double d_min) {
  ScriptedTrajectory script;
  script.interpolation = Interpolation::kLinear;
  const double dt = 0.008;
  const int stride = 5;
  double t = 0.0;
  double x = a.x_start;
  double v = 0.0;
  script.keyframes.push_back(Keyframe{0.0, Vec3(x, a.y, 0.0), kPi, {}});
  if (a.delay > 0.0) {
    t = a.delay;
    script.keyframes.push_back(Keyframe{t, Vec3(x, a.y, 0.0), kPi, {}});
  }
  for (int i = 1; x > a.x_stop; ++i) {
    const double gap = std::hypot(x, a.y) - 0.14;
    const double law = a.care * std::max(0.0, gap * gap - d_min * d_min) / a.lambda;
    const double brake = std::sqrt(2.0 * a.accel * (x - a.x_stop));
    const double target = std::min({a.peak, law, brake});
    v = std::min(target, v + a.accel * dt);
    x = std::max(a.x_stop, x - v * dt);
    t += dt;
    if (v < 1e-4 && x - a.x_stop < 1e-3) x = a.x_stop;
    if (i % stride == 0 || x <= a.x_stop) script.keyframes.push_back(Keyframe{t, Vec3(x, a.y, 0.0), kPi, {}});
  }
  if (a.retreat) {
    const double back = smooth_duration(a.x_start - a.x_stop, a.peak * 0.8);
    t += a.pause;
    script.keyframes.push_back(Keyframe{t, Vec3(a.x_stop, a.y, 0.0), kPi, {}});
    const int pieces = 40;
    for (int i = 1; i <= pieces; ++i) {
      const double u = static_cast<double>(i) / pieces;
      const double w = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
      script.keyframes.push_back(
          Keyframe{t + back * u, Vec3(a.x_stop + w * (a.x_start - a.x_stop), a.y, 0.0), kPi, {}});
    }
  }
  return script;
}

Scenario head_on(std::uint64_t seed) {
  Variation var(seed);
  Scenario s = base_scenario("head_on", seed);
  Approach a;
  a.y = var.pick(0.0, -0.2, 0.2);
  a.x_stop = var.pick(0.85, 0.82, 0.95);
  a.peak = var.pick(1.4, 1.0, 1.5);
  a.delay = var.pick(0.3, 0.0, 0.6);
  a.pause = var.pick(0.8, 0.3, 1.2);
  s.environment.dynamic_agents.push_back(scripted_human("human", approach_script(a, s.params.d_min)));
  s.task = back_and_forth(5, 2.0);
  s.duration = 10.0;
  return s;
}

// Walks up at a constant speed, brakes at a constant rate onto the stopping point, pauses and
// walks back.
struct Walk {
  double x_start = 2.0;
  double speed = 0.5;
  double x_stop = 1.0;
  double y = 0.05;
  double pause = 0.5;
  double accel = 2.0;
};

ScriptedTrajectory decelerating_script(const Walk& w) {
  ScriptedTrajectory script;
  script.interpolation = Interpolation::kLinear;
  const double dt = 0.008;
  const double ramp = w.speed * w.speed / (2.0 * w.accel);
  const double brake = w.speed * w.speed / (2.0 * (w.x_start - ramp - w.x_stop));
  double t = 0.0;
  double x = w.x_start;
  double v = 0.0;
  bool ramping = true;
  script.keyframes.push_back(Keyframe{0.0, Vec3(x, w.y, 0.0), kPi, {}});
  for (int i = 1; x > w.x_stop; ++i) {
    if (ramping) {
      v = std::min(w.speed, v + w.accel * dt);
      ramping = v < w.speed;
    } else {
      v = std::max(0.02, std::sqrt(std::max(0.0, 2.0 * brake * (x - w.x_stop))));
    }
    x = std::max(w.x_stop, x - v * dt);
    t += dt;
    if (i % 5 == 0 || x <= w.x_stop) script.keyframes.push_back(Keyframe{t, Vec3(x, w.y, 0.0), kPi, {}});
  }
  t += w.pause;
  script.keyframes.push_back(Keyframe{t, Vec3(w.x_stop, w.y, 0.0), kPi, {}});
  const double back = smooth_duration(w.x_start - w.x_stop, 0.8 * w.speed);
  const int pieces = 40;
  for (int i = 1; i <= pieces; ++i) {
    const double u = static_cast<double>(i) / pieces;
    const double s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    script.keyframes.push_back(
        Keyframe{t + back * u, Vec3(w.x_stop + s * (w.x_start - w.x_stop), w.y, 0.0), kPi, {}});
  }
  return script;
}

Scenario decelerating(std::uint64_t seed) {
  Variation var(seed);
  Scenario s = base_scenario("decelerating", seed);
  Walk w;
  w.x_start = var.pick(2.0, 1.8, 2.2);
  w.speed = var.pick(0.5, 0.4, 0.6);
  w.x_stop = var.pick(1.0, 0.95, 1.05);
  w.y = var.pick(0.05, -0.1, 0.15);
  w.pause = var.pick(0.5, 0.3, 0.8);
  s.environment.dynamic_agents.push_back(scripted_human("human", decelerating_script(w)));
  s.task = Task{{reach_configuration()}, 2.0};
  s.duration = 8.0;
  return s;
}

Scenario handover(std::uint64_t seed) {
  Variation var(seed);
  Scenario s = base_scenario("handover", seed);
  const double y = var.pick(-0.2, -0.3, -0.1);
  const double x = var.pick(1.35, 1.3, 1.45);
  const double reach = var.pick(0.5, 0.45, 0.55);
  const double lift = var.pick(0.2, 0.1, 0.25);
  const double peak = var.pick(1.0, 0.6, 1.4);
  const double start = var.pick(0.5, 0.2, 1.0);
  const double hold = var.pick(1.0, 0.5, 1.5);
  const double lambda = 0.5;
  const double care = 0.7;
  const double accel = 2.0;

  // The hand moves along a straight line toward the tool, slowing with the same clearance law
  // as the walking humans (measured against the tool of the reaching pose).
  const Skeleton sk = Skeleton::human();
  const int hand = sk.joint_index("r_hand");
  const Vec3 dir = Vec3(reach, 0.0, lift).normalized();
  const double length = Vec3(reach, 0.0, lift).norm();
  const Vec3 tool(0.768, 0.0, kTableHeight + 0.39);
  const auto hand_world = [&](double along) {
    const Vec3 local = sk.rest_points[static_cast<std::size_t>(hand)] + along * dir;
    return Vec3(x - local.x(), y - local.y(), local.z());
  };

  ScriptedTrajectory script;
  script.interpolation = Interpolation::kLinear;
  const double dt = 0.008;
  script.keyframes.push_back(Keyframe{0.0, Vec3(x, y, 0.0), kPi, {}});
  double t = start;
  script.keyframes.push_back(Keyframe{t, Vec3(x, y, 0.0), kPi, {}});
  double along = 0.0;
  double v = 0.0;
  double extent = length;
  for (int i = 1; along < extent; ++i) {
    const double gap = (hand_world(along) - tool).norm() - 0.1;
    const double law = care * std::max(0.0, gap * gap - s.params.d_min * s.params.d_min) / lambda;
    const double brake = std::sqrt(2.0 * accel * (length - along));
    v = std::min({peak, law, brake, v + accel * dt});
    along = std::min(length, along + v * dt);
    t += dt;
    if (v < 1e-4 && (length - along < 1e-3 || i > 1)) extent = along;
    if (i % 5 == 0 || along >= extent) {
      script.keyframes.push_back(Keyframe{t, Vec3(x, y, 0.0), kPi, {{hand, along * dir}}});
    }
  }
  t += hold;
  script.keyframes.push_back(Keyframe{t, Vec3(x, y, 0.0), kPi, {{hand, extent * dir}}});
  script.keyframes.push_back(Keyframe{t + smooth_duration(extent, 0.8), Vec3(x, y, 0.0), kPi, {}});
  s.environment.dynamic_agents.push_back(scripted_human("human", std::move(script)));
  s.task = Task{{reach_configuration()}, 1.0};
  s.duration = 8.0;
  return s;
}

Scenario hold(std::uint64_t seed) {
  Scenario s = base_scenario("hold", seed);
  s.initial = JointState::at_rest(default_home_configuration());
  ScriptedTrajectory script;
  script.keyframes = {Keyframe{0.0, Vec3(3.0, 0.0, 0.0), kPi, {}}};
  s.environment.dynamic_agents.push_back(scripted_human("human", std::move(script)));
  s.task = Task{{default_home_configuration()}, 1.0};
  s.duration = 2.0;
  return s;
}

}  // namespace

const std::vector<std::string>& scenario_families() {
  static const std::vector<std::string> names = {"head_on", "decelerating", "handover", "hold"};
  return names;
}

VecX reach_configuration() { return degrees({0.0, 45.0, -25.0, 0.0, 70.0, 0.0}); }

DynamicAgent scripted_human(std::string label, ScriptedTrajectory script) {
  script.validate();
  DynamicAgent a;
  a.label = std::move(label);
  a.skeleton = Skeleton::human();
  a.driver = ScriptedDriver{std::move(script)};
  return a;
}

DynamicAgent external_human(std::string label, const Vec3& root, double yaw) {
  DynamicAgent a;
  a.label = std::move(label);
  a.skeleton = Skeleton::human();
  a.driver = ExternalDriver{};
  a.root = root;
  a.yaw = yaw;
  a.offsets.assign(a.skeleton.rest_points.size(), Vec3::Zero());
  return a;
}

Scenario make_scenario(std::string_view family, std::uint64_t seed) {
  if (family == "head_on") return head_on(seed);
  if (family == "decelerating") return decelerating(seed);
  if (family == "handover") return handover(seed);
  if (family == "hold") return hold(seed);
  throw ConfigError("unknown scenario family '" + std::string(family) + "'");
}

}  // namespace jssa
