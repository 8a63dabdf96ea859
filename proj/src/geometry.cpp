#include "jssa/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "jssa/errors.hpp"

namespace jssa {

namespace {

constexpr double kParallelEps = 1e-12;
// Ties between candidate pairs of a parallel configuration are resolved within this band.
constexpr double kTieEps = 1e-12;

struct SegmentParams {
  double s = 0.0;
  double t = 0.0;
};

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Closest parameter on segment p + t*d (t in [0,1]) to point x.
double project_on_segment(const Vec3& x, const Vec3& p, const Vec3& d) {
  const double dd = d.squaredNorm();
  if (dd <= kParallelEps) return 0.0;
  return clamp01((x - p).dot(d) / dd);
}

SegmentParams parallel_closest(const Vec3& p1, const Vec3& d1, const Vec3& p2, const Vec3& d2) {
  // The optimal set is an interval; its smallest-s member is an endpoint projection.
  std::array<SegmentParams, 4> cand{{
      {0.0, project_on_segment(p1, p2, d2)},
      {1.0, project_on_segment(p1 + d1, p2, d2)},
      {project_on_segment(p2, p1, d1), 0.0},
      {project_on_segment(p2 + d2, p1, d1), 1.0},
  }};
  SegmentParams best = cand[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (auto c : cand) {
    // Re-project so that t is optimal for this s.
    c.t = project_on_segment(p1 + c.s * d1, p2, d2);
    const double dist = ((p1 + c.s * d1) - (p2 + c.t * d2)).squaredNorm();
    const bool better = dist < best_d - kTieEps;
    const bool tie = std::abs(dist - best_d) <= kTieEps &&
                     (c.s < best.s || (c.s == best.s && c.t < best.t));
    if (better || tie) {
      best = c;
      best_d = std::min(best_d, dist);
    }
  }
  return best;
}

// Closest points of segments p1 + s d1 and p2 + t d2 (after Ericson, Real-Time Collision
// Detection, 5.1.9) with an explicit parallel branch.
SegmentParams closest_segment_params(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                     const Vec3& q2) {
  const Vec3 d1 = q1 - p1;
  const Vec3 d2 = q2 - p2;
  const Vec3 r = p1 - p2;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);

  if (a <= kParallelEps && e <= kParallelEps) return {0.0, 0.0};
  if (a <= kParallelEps) return {0.0, clamp01(f / e)};
  const double c = d1.dot(r);
  if (e <= kParallelEps) return {clamp01(-c / a), 0.0};

  const double b = d1.dot(d2);
  const double denom = a * e - b * b;
  if (denom <= kParallelEps * a * e) return parallel_closest(p1, d1, p2, d2);

  double s = clamp01((b * f - c * e) / denom);
  double t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = clamp01(-c / a);
  } else if (t > 1.0) {
    t = 1.0;
    s = clamp01((b - c) / a);
  }
  return {s, t};
}

PointState interpolate(const PointState& a, const PointState& b, double t) {
  PointState out;
  out.p = (1.0 - t) * a.p + t * b.p;
  out.v = (1.0 - t) * a.v + t * b.v;
  out.a = (1.0 - t) * a.a + t * b.a;
  return out;
}

Mat9 make_selector(int row_block, int col_block) {
  Mat9 u = Mat9::Zero();
  u.block<3, 3>(3 * row_block, 3 * col_block).setIdentity();
  return u;
}

}  // namespace

Vec9 PointState::stacked() const {
  Vec9 out;
  out << p, v, a;
  return out;
}

CapsuleDistance capsule_distance(const Capsule& a, const Capsule& b) {
  const SegmentParams st = closest_segment_params(a.p0, a.p1, b.p0, b.p1);
  CapsuleDistance out;
  out.s = st.s;
  out.t = st.t;
  out.witness_a = a.p0 + st.s * (a.p1 - a.p0);
  out.witness_b = b.p0 + st.t * (b.p1 - b.p0);
  out.distance = (out.witness_a - out.witness_b).norm() - a.radius - b.radius;
  return out;
}

std::vector<Capsule> robot_capsules(const KinematicChain& chain, const VecX& theta) {
  const auto frames = chain.forward_kinematics(theta);
  std::vector<Capsule> out;
  out.reserve(chain.capsules().size());
  for (const auto& c : chain.capsules()) {
    const Iso3& f = frames[static_cast<std::size_t>(c.frame)];
    out.push_back(Capsule{f * c.p0, f * c.p1, c.radius});
  }
  return out;
}

CriticalPair critical_pair(const KinematicChain& chain, const JointState& q,
                           std::span<const AgentCapsule> agents) {
  if (chain.capsules().empty() || agents.empty()) {
    throw Error("critical_pair: need at least one robot capsule and one agent capsule");
  }
  const auto frames = chain.forward_kinematics(q.theta);
  const auto& attachments = chain.capsules();

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_robot = 0;
  std::size_t best_agent = 0;
  CapsuleDistance best_cd;
  for (std::size_t i = 0; i < attachments.size(); ++i) {
    const auto& att = attachments[i];
    const Iso3& f = frames[static_cast<std::size_t>(att.frame)];
    const Capsule rc{f * att.p0, f * att.p1, att.radius};
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const CapsuleDistance cd = capsule_distance(rc, agents[k].capsule);
      // Strict comparison keeps the lexicographically lowest (robot, agent) pair on ties.
      if (cd.distance < best) {
        best = cd.distance;
        best_robot = i;
        best_agent = k;
        best_cd = cd;
      }
    }
  }

  const auto& att = attachments[best_robot];
  const auto& ag = agents[best_agent];
  CriticalPair pair;
  pair.distance = best_cd.distance;
  pair.radius_sum = att.radius + ag.capsule.radius;
  pair.core_distance = (best_cd.witness_a - best_cd.witness_b).norm();
  pair.robot_capsule = static_cast<int>(best_robot);
  pair.robot_frame = att.frame;
  pair.agent_index = ag.agent;
  pair.agent_capsule = ag.capsule_id;
  pair.robot_local_point = frames[static_cast<std::size_t>(att.frame)].inverse() * best_cd.witness_a;

  const PointJacobianBundle bundle =
      chain.point_jacobian_bundle(q, att.frame, pair.robot_local_point);
  pair.robot_point.p = best_cd.witness_a;
  pair.robot_point.v = point_velocity(bundle, q);
  pair.robot_point.a = point_acceleration(bundle, q);
  pair.agent_point = interpolate(ag.end0, ag.end1, best_cd.t);
  pair.agent_point.p = best_cd.witness_b;
  return pair;
}

double minimum_distance(const KinematicChain& chain, const VecX& theta,
                        std::span<const AgentCapsule> agents) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rc : robot_capsules(chain, theta)) {
    for (const auto& ag : agents) best = std::min(best, capsule_distance(rc, ag.capsule).distance);
  }
  return best;
}

Vec9 relative_state(const PointState& robot, const PointState& agent) {
  return robot.stacked() - agent.stacked();
}

const Mat9& selector_u1() {
  static const Mat9 u = make_selector(0, 0);
  return u;
}
const Mat9& selector_u2() {
  static const Mat9 u = make_selector(0, 1);
  return u;
}
const Mat9& selector_u3() {
  static const Mat9 u = make_selector(1, 1);
  return u;
}
const Mat9& selector_u4() {
  static const Mat9 u = make_selector(0, 2);
  return u;
}

DistanceDerivatives distance_derivatives(const Vec9& delta) {
  const double d2 = delta.dot(selector_u1() * delta);
  const double d = std::sqrt(d2);
  if (!(d > kDegenerateDistance)) {
    throw DegenerateDistance("critical point pair distance is " + std::to_string(d));
  }
  DistanceDerivatives out;
  out.d = d;
  out.d_dot = delta.dot(selector_u2() * delta) / d;
  out.d_ddot = -out.d_dot * out.d_dot / d + delta.dot(selector_u3() * delta) / d +
               delta.dot(selector_u4() * delta) / d;
  return out;
}

DistanceDerivatives distance_derivatives(const CriticalPair& pair) {
  return distance_derivatives(relative_state(pair.robot_point, pair.agent_point));
}

}  // namespace jssa
