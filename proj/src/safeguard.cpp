#include "jssa/safeguard.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "jssa/agents.hpp"
#include "jssa/errors.hpp"

namespace jssa {

namespace {

constexpr double kFeasTol = 1e-10;
constexpr int kMaxActiveSetIterations = 200;

}  // namespace

CostMatrix::CostMatrix(Eigen::MatrixXd v) : v_(std::move(v)) {
  if (v_.rows() != v_.cols() || v_.rows() < 1) throw ConfigError("cost matrix must be square");
  if (!v_.allFinite()) throw ConfigError("cost matrix has non-finite entries");
  if ((v_ - v_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, v_.cwiseAbs().maxCoeff())) {
    throw ConfigError("cost matrix must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(v_);
  if (llt.info() != Eigen::Success) throw ConfigError("cost matrix must be positive definite");
}

CostMatrix CostMatrix::identity(int n) { return CostMatrix(Eigen::MatrixXd::Identity(n, n)); }

std::string_view to_string(Fallback f) {
  switch (f) {
    case Fallback::kNone:
      return "none";
    case Fallback::kClip:
      return "clip";
    case Fallback::kMaxBrake:
      return "max_brake";
  }
  return "unknown";
}

VecX max_safety_effort(const VecX& u_nom, const Eigen::RowVectorXd& L, const JerkBounds& bounds) {
  VecX u = bounds.clamp(u_nom);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (L[i] > 0.0) {
      u[i] = bounds.upper[i];
    } else if (L[i] < 0.0) {
      u[i] = bounds.lower[i];
    }
  }
  return u;
}

QpSolution solve_projection_qp(const VecX& u_nom, const Eigen::RowVectorXd& L, double S,
                               const JerkBounds& bounds, const CostMatrix& V) {
  const int n = static_cast<int>(u_nom.size());
  if (L.size() != n || bounds.dof() != n || V.dim() != n) {
    throw DimensionError("solve_projection_qp: dimension mismatch");
  }
  QpSolution sol;
  sol.lower_multipliers = VecX::Zero(n);
  sol.upper_multipliers = VecX::Zero(n);

  const double lnorm = L.norm();
  const VecX vertex = max_safety_effort(u_nom, L, bounds);
  if (L.dot(vertex) < S - kFeasTol * std::max(1.0, lnorm)) {
    sol.u = vertex;
    return sol;
  }
  sol.feasible = true;

  // Feasible start: the clipped nominal, pulled toward the vertex until L x >= S.
  VecX x = bounds.clamp(u_nom);
  const double lx = L.dot(x);
  if (lx < S) {
    const double lv = L.dot(vertex);
    const double w = lv > lx ? std::min(1.0, (S - lx) / (lv - lx)) : 1.0;
    x = x + w * (vertex - x);
  }
  // Unit-norm copy of the row keeps its multiplier on the scale of the box multipliers.
  const VecX a = lnorm > 0.0 ? VecX(L.transpose() / lnorm) : VecX(VecX::Zero(n));
  const double b = lnorm > 0.0 ? S / lnorm : 0.0;
  const Eigen::MatrixXd& Vm = V.matrix();

  // Working set: fixed[i] = -1 (lower), +1 (upper) or 0 (free); row_active for L x >= S.
  std::vector<int> fixed(static_cast<std::size_t>(n), 0);
  bool row_active = false;
  double mu_hat = 0.0;
  VecX gradient = VecX::Zero(n);

  for (int iter = 0; iter < kMaxActiveSetIterations; ++iter) {
    sol.iterations = iter + 1;
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i) {
      if (fixed[static_cast<std::size_t>(i)] == 0) free_idx.push_back(i);
    }
    const int f = static_cast<int>(free_idx.size());
    const bool use_row = row_active && f > 0;
    const int m = f + (use_row ? 1 : 0);

    // Minimizer of the objective on the working set.
    VecX target = x;
    double row_multiplier = 0.0;
    if (m > 0) {
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
      for (int r = 0; r < f; ++r) {
        const int i = free_idx[static_cast<std::size_t>(r)];
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
          acc += 2.0 * Vm(i, j) * (u_nom[j] - (fixed[static_cast<std::size_t>(j)] != 0 ? x[j] : 0.0));
        }
        rhs[r] = acc;
        for (int c = 0; c < f; ++c) K(r, c) = 2.0 * Vm(i, free_idx[static_cast<std::size_t>(c)]);
      }
      if (use_row) {
        double fixed_part = 0.0;
        for (int j = 0; j < n; ++j) {
          if (fixed[static_cast<std::size_t>(j)] != 0) fixed_part += a[j] * x[j];
        }
        for (int r = 0; r < f; ++r) {
          K(f, r) = a[free_idx[static_cast<std::size_t>(r)]];
          K(r, f) = -a[free_idx[static_cast<std::size_t>(r)]];
        }
        rhs[f] = b - fixed_part;
      }
      const Eigen::VectorXd z = K.fullPivLu().solve(rhs);
      for (int r = 0; r < f; ++r) target[free_idx[static_cast<std::size_t>(r)]] = z[r];
      if (use_row) row_multiplier = z[f];
    }
    const VecX p = target - x;

    if (p.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      x = target;
      mu_hat = use_row ? row_multiplier : 0.0;
      gradient = 2.0 * Vm * (x - u_nom) - mu_hat * a;
      // With every coordinate on a bound the row is implied; the box carries the multipliers.
      if (!use_row) row_active = false;
      // Release the constraint with the most negative multiplier, if any.
      const double tol = 1e-12 * (1.0 + gradient.lpNorm<Eigen::Infinity>() + std::abs(mu_hat));
      int release = -2;
      double most_negative = -tol;
      if (row_active && mu_hat < most_negative) {
        most_negative = mu_hat;
        release = -1;
      }
      for (int i = 0; i < n; ++i) {
        const int s = fixed[static_cast<std::size_t>(i)];
        if (s == 0) continue;
        const double lam = s < 0 ? gradient[i] : -gradient[i];
        if (lam < most_negative) {
          most_negative = lam;
          release = i;
        }
      }
      if (release == -2) break;
      if (release == -1) {
        row_active = false;
      } else {
        fixed[static_cast<std::size_t>(release)] = 0;
      }
      continue;
    }

    // Ratio test against the constraints outside the working set.
    double alpha = 1.0;
    int blocking = -2;
    const double pscale = p.lpNorm<Eigen::Infinity>();
    if (!row_active) {
      const double ap = a.dot(p);
      if (ap < -1e-13 * pscale) {
        const double step = (b - a.dot(x)) / ap;
        if (step < alpha) {
          alpha = std::max(0.0, step);
          blocking = -1;
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      if (fixed[static_cast<std::size_t>(i)] != 0 || p[i] == 0.0) continue;
      const double step = p[i] < 0.0 ? (bounds.lower[i] - x[i]) / p[i] : (bounds.upper[i] - x[i]) / p[i];
      if (step < alpha) {
        alpha = std::max(0.0, step);
        blocking = i;
      }
    }
    x += alpha * p;
    if (blocking == -1) {
      row_active = true;
    } else if (blocking >= 0) {
      const int i = blocking;
      fixed[static_cast<std::size_t>(i)] = p[i] < 0.0 ? -1 : 1;
      x[i] = p[i] < 0.0 ? bounds.lower[i] : bounds.upper[i];
    }
  }

  sol.mu = lnorm > 0.0 ? mu_hat / lnorm : 0.0;
  for (int i = 0; i < n; ++i) {
    const int s = fixed[static_cast<std::size_t>(i)];
    if (s < 0) sol.lower_multipliers[i] = gradient[i];
    if (s > 0) sol.upper_multipliers[i] = -gradient[i];
  }
  sol.u = bounds.clamp(x);
  return sol;
}

double kkt_residual(const QpSolution& sol, const VecX& u_nom, const Eigen::RowVectorXd& L,
                    const CostMatrix& V) {
  const VecX r = 2.0 * V.matrix() * (sol.u - u_nom) - sol.mu * L.transpose() -
                 sol.lower_multipliers + sol.upper_multipliers;
  return r.lpNorm<Eigen::Infinity>();
}

SafeControlOutcome project_safe(const JerkCommand& u_nom, const LinearizedConstraint& constraint,
                                const JerkBounds& bounds, const CostMatrix& V) {
  if (!constraint.valid) throw Error("project_safe: invalid constraint");
  if (u_nom.size() != bounds.dof() || constraint.L.size() != u_nom.size() || V.dim() != u_nom.size()) {
    throw DimensionError("project_safe: dimension mismatch");
  }
  SafeControlOutcome out;
  out.constraint = constraint;
  if (constraint.L.dot(u_nom) >= constraint.S && bounds.contains(u_nom)) {
    out.u_safe = u_nom;
    out.active = false;
    out.lu = constraint.L.dot(u_nom);
    return out;
  }
  const QpSolution sol = solve_projection_qp(u_nom, constraint.L, constraint.S, bounds, V);
  out.u_safe = sol.u;
  if (!sol.feasible) out.fallback_used = Fallback::kMaxBrake;
  const VecX diff = out.u_safe - u_nom;
  out.objective_value = diff.dot(V.matrix() * diff);
  out.active = diff.lpNorm<Eigen::Infinity>() > 1e-12;
  out.lu = constraint.L.dot(out.u_safe);
  return out;
}

JerkCommand max_brake_jerk(const JointState& q, const JerkBounds& bounds, double tau) {
  return bounds.clamp(-q.theta_ddot / tau);
}

namespace {

void fill_pair_diagnostics(SafeControlOutcome& out, const CriticalPair& pair) {
  out.d = pair.distance;
  out.robot_capsule = pair.robot_capsule;
  out.agent_index = pair.agent_index;
  out.agent_capsule = pair.agent_capsule;
  out.relative_speed = (pair.robot_point.v - pair.agent_point.v).norm();
  out.relative_accel = (pair.robot_point.a - pair.agent_point.a).norm();
}

}  // namespace

SafeControlOutcome jssa_step(const JerkCommand& u_nom, const KinematicChain& chain,
                             const JointState& q, std::span<const AgentCapsule> environment,
                             const SafetyIndexParams& params, const JerkBounds& bounds,
                             const CostMatrix& V, double tau) {
  const CriticalPair pair = critical_pair(chain, q, environment);
  SafeControlOutcome out;
  try {
    const DistanceDerivatives dd = distance_derivatives(pair);
    const PointJacobianBundle bundle =
        chain.point_jacobian_bundle(q, pair.robot_frame, pair.robot_local_point);
    const double phi_now = phi(params, pair.distance, dd.d_dot, dd.d_ddot);
    LinearizedConstraint c =
        build_constraint(params, pair, bundle, predict_point(pair.agent_point, tau), q, tau);
    c.allowance = phi_allowance(params.eta_gain, phi_now);
    c.S -= c.allowance * c.delta_cap.head<3>().norm();
    out = project_safe(u_nom, c, bounds, V);
    out.d_dot = dd.d_dot;
    out.d_ddot = dd.d_ddot;
    out.phi = phi_now;
  } catch (const DegenerateDistance&) {
    out = SafeControlOutcome{};
    out.u_safe = max_brake_jerk(q, bounds, tau);
    out.fallback_used = Fallback::kMaxBrake;
    out.active = true;
    out.phi = phi(params, pair.distance, 0.0, 0.0);
  }
  fill_pair_diagnostics(out, pair);
  return out;
}

SafeControlOutcome ssa_step(const JerkCommand& u_nom, const KinematicChain& chain,
                            const JointState& q, std::span<const AgentCapsule> environment,
                            const SsaParams& params, const JerkBounds& bounds, double tau) {
  if (!(params.lambda1 > 0.0)) throw ConfigError("ssa_step: lambda1 must be positive");
  const CriticalPair pair = critical_pair(chain, q, environment);
  SafeControlOutcome out;
  try {
    const DistanceDerivatives dd = distance_derivatives(pair);
    const PointJacobianBundle bundle =
        chain.point_jacobian_bundle(q, pair.robot_frame, pair.robot_local_point);

    // Relative position/velocity one step ahead under commanded joint acceleration w:
    // delta+ = Delta + B2 J w with the robot point acceleration J w + J_dot theta_dot.
    const PointState agent_next = predict_point(pair.agent_point, tau);
    const Vec3 drift = bundle.J_dot * q.theta_dot;
    const Vec3 dp = pair.robot_point.p + tau * pair.robot_point.v + 0.5 * tau * tau * drift - agent_next.p;
    const Vec3 dv = pair.robot_point.v + tau * drift - agent_next.v;
    const double dc = dp.norm();
    if (!(dc > kDegenerateDistance)) throw DegenerateDistance("predicted critical pair coincides");
    const double ds = dc - pair.radius_sum;
    const double dmin2 = params.d_min * params.d_min;

    LinearizedConstraint c;
    c.delta_cap.setZero();
    c.delta_cap.segment<3>(0) = dp;
    c.delta_cap.segment<3>(3) = dv;
    const double phi_now = dmin2 - pair.distance * pair.distance - params.lambda1 * dd.d_dot;
    c.allowance = phi_allowance(params.eta_gain, phi_now);
    c.S = (dmin2 - ds * ds) * dc - params.lambda1 * dp.dot(dv) - c.allowance * dc;
    const Vec3 grad_p = ((dmin2 - ds * ds) - 2.0 * ds * dc) * (dp / dc) - params.lambda1 * dv;
    const Vec3 grad_v = -params.lambda1 * dp;
    const Eigen::RowVectorXd grad_in =
        (0.5 * tau * tau * grad_p + tau * grad_v).transpose() * bundle.J;
    c.L = -grad_in;
    c.valid = true;

    const VecX w_nom = q.theta_ddot + tau * u_nom;
    VecX w = w_nom;
    const double lw = c.L.dot(w_nom);
    const double ll = c.L.squaredNorm();
    if (lw < c.S && ll > 0.0) w = w_nom + c.L.transpose() * ((c.S - lw) / ll);

    const VecX u_raw = (w - q.theta_ddot) / tau;
    out.constraint = c;
    out.preclip_violation = !bounds.contains(u_raw);
    out.u_safe = bounds.clamp(u_raw);
    if (out.preclip_violation) out.fallback_used = Fallback::kClip;
    out.active = (out.u_safe - u_nom).lpNorm<Eigen::Infinity>() > 1e-12;
    if (!out.active) out.u_safe = u_nom;
    out.lu = c.L.dot(q.theta_ddot + tau * out.u_safe);
    const VecX diff = out.u_safe - u_nom;
    out.objective_value = diff.squaredNorm();
    out.d_dot = dd.d_dot;
    out.d_ddot = dd.d_ddot;
    out.phi = phi_now;
  } catch (const DegenerateDistance&) {
    out = SafeControlOutcome{};
    out.u_safe = max_brake_jerk(q, bounds, tau);
    out.fallback_used = Fallback::kMaxBrake;
    out.active = true;
  }
  fill_pair_diagnostics(out, pair);
  return out;
}

}  // namespace jssa
