#include "jssa/agents.hpp"

#include <algorithm>
#include <cmath>

#include "jssa/errors.hpp"

namespace jssa {

namespace {

Vec3 clamp_norm(const Vec3& v, double bound) {
  const double n = v.norm();
  if (n > bound && n > 0.0) return v * (bound / n);
  return v;
}

double blend(double u, Interpolation mode) {
  u = std::clamp(u, 0.0, 1.0);
  if (mode == Interpolation::kLinear) return u;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

Eigen::Matrix3d yaw_rotation(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

std::vector<Vec3> keyframe_offsets(const Keyframe& k, std::size_t joint_count) {
  std::vector<Vec3> out(joint_count, Vec3::Zero());
  for (const auto& [idx, off] : k.offsets) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= joint_count) {
      throw ConfigError("keyframe offset references unknown joint " + std::to_string(idx));
    }
    out[static_cast<std::size_t>(idx)] = off;
  }
  return out;
}

}  // namespace

int Skeleton::joint_index(std::string_view name) const {
  for (std::size_t i = 0; i < joint_names.size(); ++i) {
    if (joint_names[i] == name) return static_cast<int>(i);
  }
  throw ConfigError("skeleton has no joint named '" + std::string(name) + "'");
}

Skeleton Skeleton::human() {
  Skeleton s;
  s.joint_names = {"head_top", "head_base", "neck",  "pelvis", "r_shoulder", "r_hand",
                   "l_shoulder", "l_hand",  "r_hip", "r_foot", "l_hip",      "l_foot"};
  s.rest_points = {
      {0.0, 0.0, 1.68},   {0.0, 0.0, 1.60},   {0.0, 0.0, 1.42},  {0.0, 0.0, 0.95},
      {0.0, -0.20, 1.40}, {0.0, -0.22, 0.85}, {0.0, 0.20, 1.40}, {0.0, 0.22, 0.85},
      {0.0, -0.10, 0.90}, {0.0, -0.10, 0.06}, {0.0, 0.10, 0.90}, {0.0, 0.10, 0.06},
  };
  s.links = {
      {"head", 0, 1, 0.10},      {"core", 2, 3, 0.15},      {"right_arm", 4, 5, 0.06},
      {"left_arm", 6, 7, 0.06},  {"right_leg", 8, 9, 0.06}, {"left_leg", 10, 11, 0.06},
  };
  return s;
}

void ScriptedTrajectory::validate() const {
  if (keyframes.empty()) throw ConfigError("scripted trajectory has no keyframes");
  for (std::size_t i = 1; i < keyframes.size(); ++i) {
    if (!(keyframes[i].t > keyframes[i - 1].t)) {
      throw ConfigError("scripted trajectory timestamps must be strictly increasing");
    }
  }
}

ScriptedTrajectory::Sample ScriptedTrajectory::sample(double t, std::size_t joint_count) const {
  if (keyframes.empty()) throw ConfigError("scripted trajectory has no keyframes");
  Sample out;
  const auto hold = [&](const Keyframe& k) {
    out.root = k.root;
    out.yaw = k.yaw;
    out.offsets = keyframe_offsets(k, joint_count);
    return out;
  };
  if (t <= keyframes.front().t) return hold(keyframes.front());
  if (t >= keyframes.back().t) return hold(keyframes.back());

  const auto it = std::upper_bound(keyframes.begin(), keyframes.end(), t,
                                   [](double x, const Keyframe& k) { return x < k.t; });
  const Keyframe& b = *it;
  const Keyframe& a = *(it - 1);
  const double w = blend((t - a.t) / (b.t - a.t), interpolation);
  out.root = (1.0 - w) * a.root + w * b.root;
  out.yaw = (1.0 - w) * a.yaw + w * b.yaw;
  const auto oa = keyframe_offsets(a, joint_count);
  const auto ob = keyframe_offsets(b, joint_count);
  out.offsets.resize(joint_count);
  for (std::size_t i = 0; i < joint_count; ++i) out.offsets[i] = (1.0 - w) * oa[i] + w * ob[i];
  return out;
}

std::vector<Capsule> DynamicAgent::capsules() const {
  std::vector<Capsule> out;
  out.reserve(skeleton.links.size());
  for (const auto& l : skeleton.links) {
    out.push_back(Capsule{joints.at(static_cast<std::size_t>(l.joint_a)).p,
                          joints.at(static_cast<std::size_t>(l.joint_b)).p, l.radius});
  }
  return out;
}

std::vector<Vec3> skeleton_points(const Skeleton& skeleton, const Vec3& root, double yaw,
                                  const std::vector<Vec3>& offsets) {
  const Eigen::Matrix3d r = yaw_rotation(yaw);
  std::vector<Vec3> out(skeleton.rest_points.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3 off = i < offsets.size() ? offsets[i] : Vec3::Zero();
    out[i] = root + r * (skeleton.rest_points[i] + off);
  }
  return out;
}

void initialize_agent(DynamicAgent& agent, double t, double tau) {
  const std::size_t nj = agent.skeleton.rest_points.size();
  agent.offsets.assign(nj, Vec3::Zero());
  std::vector<Vec3> prev_points;
  if (const auto* sd = std::get_if<ScriptedDriver>(&agent.driver)) {
    const auto now = sd->script.sample(t, nj);
    const auto prev = sd->script.sample(t - tau, nj);
    agent.root = now.root;
    agent.yaw = now.yaw;
    agent.offsets = now.offsets;
    agent.root_velocity = clamp_norm((now.root - prev.root) / tau, agent.speed_bound);
    prev_points = skeleton_points(agent.skeleton, prev.root, prev.yaw, prev.offsets);
  } else {
    agent.root_velocity.setZero();
    prev_points = skeleton_points(agent.skeleton, agent.root, agent.yaw, agent.offsets);
  }
  const auto points = skeleton_points(agent.skeleton, agent.root, agent.yaw, agent.offsets);
  agent.joints.assign(nj, PointState{});
  for (std::size_t i = 0; i < nj; ++i) {
    agent.joints[i].p = points[i];
    agent.joints[i].v = clamp_norm((points[i] - prev_points[i]) / tau, agent.speed_bound);
    agent.joints[i].a.setZero();
  }
}

PointState predict_point(const PointState& point, double tau) {
  PointState out;
  out.p = point.p + tau * point.v;
  out.v = point.v;
  out.a.setZero();
  return out;
}

DynamicAgent predict_agent(const DynamicAgent& agent, double tau) {
  if (!(tau > 0.0)) throw Error("predict_agent: tau must be positive");
  DynamicAgent out = agent;
  out.root = agent.root + tau * agent.root_velocity;
  for (auto& j : out.joints) j = predict_point(j, tau);
  return out;
}

DynamicAgent advance_driver(const DynamicAgent& agent, double t, double tau,
                            const std::optional<ExternalInput>& input) {
  if (!(tau > 0.0)) throw Error("advance_driver: tau must be positive");
  DynamicAgent out = agent;
  const std::size_t nj = agent.skeleton.rest_points.size();

  Vec3 feedforward = Vec3::Zero();
  std::optional<Vec3> target;
  if (auto* sd = std::get_if<ScriptedDriver>(&out.driver)) {
    if (sd->script.keyframes.empty()) throw ConfigError("scripted agent '" + agent.label + "' has no script");
    const auto now = sd->script.sample(t, nj);
    const auto prev = sd->script.sample(t - tau, nj);
    feedforward = (now.root - prev.root) / tau;
    target = now.root;
    out.yaw = now.yaw;
    out.offsets = now.offsets;
  } else {
    auto& ed = std::get<ExternalDriver>(out.driver);
    if (input) {
      ed.target = input->target;
      ed.last_input_time = input->stamp;
    }
    if (ed.target && t - ed.last_input_time <= ed.staleness) target = ed.target;
    if (out.offsets.size() != nj) out.offsets.assign(nj, Vec3::Zero());
  }

  Vec3 velocity = agent.root_velocity;
  if (target) {
    // Track the target with feedforward plus a correction that can still be braked within
    // the acceleration bound.
    const Vec3 err = *target - (agent.root + tau * feedforward);
    Vec3 correction = err / tau;
    const double cap = std::sqrt(2.0 * agent.accel_bound * err.norm());
    correction = clamp_norm(correction, cap);
    const Vec3 desired = feedforward + correction;
    velocity = agent.root_velocity + clamp_norm(desired - agent.root_velocity, agent.accel_bound * tau);
    velocity = clamp_norm(velocity, agent.speed_bound);
  }
  out.root = agent.root + tau * velocity;
  out.root_velocity = velocity;

  const auto points = skeleton_points(out.skeleton, out.root, out.yaw, out.offsets);
  out.joints.resize(nj);
  const double alpha = std::clamp(agent.velocity_smoothing, 0.0, 1.0);
  for (std::size_t i = 0; i < nj; ++i) {
    const PointState& old = agent.joints.at(i);
    const Vec3 raw = (points[i] - old.p) / tau;
    Vec3 v = clamp_norm((1.0 - alpha) * raw + alpha * old.v, agent.speed_bound);
    out.joints[i].p = points[i];
    out.joints[i].a = clamp_norm((v - old.v) / tau, agent.accel_bound);
    out.joints[i].v = v;
  }
  return out;
}

std::vector<AgentCapsule> Environment::agent_capsules() const {
  std::vector<AgentCapsule> out;
  int index = 0;
  for (const auto& d : dynamic_agents) {
    for (std::size_t k = 0; k < d.skeleton.links.size(); ++k) {
      const auto& l = d.skeleton.links[k];
      AgentCapsule c;
      c.end0 = d.joints.at(static_cast<std::size_t>(l.joint_a));
      c.end1 = d.joints.at(static_cast<std::size_t>(l.joint_b));
      c.end0.a.setZero();
      c.end1.a.setZero();
      c.capsule = Capsule{c.end0.p, c.end1.p, l.radius};
      c.agent = index;
      c.capsule_id = static_cast<int>(k);
      out.push_back(c);
    }
    ++index;
  }
  for (const auto& s : static_agents) {
    for (std::size_t k = 0; k < s.capsules.size(); ++k) {
      AgentCapsule c;
      c.capsule = s.capsules[k];
      c.end0.p = s.capsules[k].p0;
      c.end1.p = s.capsules[k].p1;
      c.agent = index;
      c.capsule_id = static_cast<int>(k);
      out.push_back(c);
    }
    ++index;
  }
  return out;
}

}  // namespace jssa
