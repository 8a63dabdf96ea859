#include "jssa/safety_index.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Dense>

#include "jssa/errors.hpp"

namespace jssa {

double phi(const SafetyIndexParams& params, double d, double d_dot, double d_ddot) {
  return params.d_min * params.d_min - d * d - params.lambda1 * d_dot - params.lambda2 * d_ddot;
}

double phi_allowance(double eta_gain, double phi_now) {
  return std::max(phi_now - eta_gain * phi_now, 0.0);
}

bool validate_roots(const SafetyIndexParams& params) {
  const double l1 = params.lambda1;
  const double l2 = params.lambda2;
  if (l2 == 0.0) return l1 > 0.0;  // single root -1/l1
  return l1 > 0.0 && l2 > 0.0 && l1 * l1 >= 4.0 * l2;
}

double trigger_threshold_d_dot(const SafetyIndexParams& params, double d, double d_ddot) {
  return (params.d_min * params.d_min - d * d - params.lambda2 * d_ddot) / params.lambda1;
}

double trigger_threshold_d_ddot(const SafetyIndexParams& params, double d, double d_dot) {
  return (params.d_min * params.d_min - d * d - params.lambda1 * d_dot) / params.lambda2;
}

Mat9 cartesian_transition(double tau) {
  Mat9 a = Mat9::Identity();
  const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
  a.block<3, 3>(0, 3) = tau * i3;
  a.block<3, 3>(0, 6) = 0.5 * tau * tau * i3;
  a.block<3, 3>(3, 6) = tau * i3;
  return a;
}

Mat9x3 cartesian_input(double tau) {
  Mat9x3 b;
  const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
  b.block<3, 3>(0, 0) = (tau * tau * tau / 6.0) * i3;
  b.block<3, 3>(3, 0) = 0.5 * tau * tau * i3;
  b.block<3, 3>(6, 0) = tau * i3;
  return b;
}

double constraint_value(const SafetyIndexParams& params, const Vec9& delta, double radius_sum) {
  const Vec3 p = delta.segment<3>(0);
  const Vec3 v = delta.segment<3>(3);
  const Vec3 a = delta.segment<3>(6);
  const double dc = p.norm();
  const double ds = dc - radius_sum;
  const double pv = p.dot(v);
  return (params.d_min * params.d_min - ds * ds) * dc - params.lambda1 * pv -
         params.lambda2 * (-(pv * pv) / (dc * dc) + v.dot(v) + p.dot(a));
}

Vec9 constraint_gradient(const SafetyIndexParams& params, const Vec9& delta, double radius_sum) {
  const Vec3 p = delta.segment<3>(0);
  const Vec3 v = delta.segment<3>(3);
  const Vec3 a = delta.segment<3>(6);
  const double dc = p.norm();
  const double dc2 = dc * dc;
  const double ds = dc - radius_sum;
  const double pv = p.dot(v);
  const double l1 = params.lambda1;
  const double l2 = params.lambda2;

  Vec9 g;
  g.segment<3>(0) = ((params.d_min * params.d_min - ds * ds) - 2.0 * ds * dc) * (p / dc) -
                    l1 * v + l2 * (2.0 * pv / dc2 * v - 2.0 * pv * pv / (dc2 * dc2) * p - a);
  g.segment<3>(3) = -l1 * p + l2 * (2.0 * pv / dc2 * p - 2.0 * v);
  g.segment<3>(6) = -l2 * p;
  return g;
}

LinearizedConstraint build_constraint(const SafetyIndexParams& params, const CriticalPair& pair,
                                      const PointJacobianBundle& bundle,
                                      const PointState& agent_next, const JointState& q,
                                      double tau) {
  if (!(tau > 0.0)) throw Error("build_constraint: tau must be positive");
  const Vec3 drift = bundle.J_ddot * q.theta_dot + 2.0 * bundle.J_dot * q.theta_ddot;
  const Mat9x3 b = cartesian_input(tau);

  LinearizedConstraint c;
  c.delta_cap = cartesian_transition(tau) * pair.robot_point.stacked() + b * drift -
                agent_next.stacked();
  if (!(c.delta_cap.segment<3>(0).norm() > kDegenerateDistance)) {
    throw DegenerateDistance("predicted critical pair coincides");
  }

  const Eigen::Matrix<double, 9, Eigen::Dynamic> bj = b * bundle.J;
  c.S = constraint_value(params, c.delta_cap, pair.radius_sum);
  if (params.form == ConstraintForm::kGradient) {
    c.L = -(constraint_gradient(params, c.delta_cap, pair.radius_sum).transpose() * bj);
  } else {
    const Vec9& dl = c.delta_cap;
    const Eigen::Matrix<double, 1, 9> row =
        2.0 * (params.lambda1 * dl.transpose() * selector_u2() +
               params.lambda2 * dl.transpose() * selector_u3() +
               params.lambda2 * dl.transpose() * selector_u4());
    c.L = row * bj;
  }
  c.valid = true;
  return c;
}

double box_support(const Eigen::RowVectorXd& c, const JerkBounds& bounds) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    s += std::max(c[i] * bounds.lower[i], c[i] * bounds.upper[i]);
  }
  return s;
}

MinimaxReport verify_minimax(const SafetyIndexParams& params, const JerkBounds& bounds,
                             const KinematicChain& chain, const MinimaxConfig& config) {
  if (config.budget < 1) throw Error("verify_minimax: budget must be >= 1");
  if (bounds.dof() != chain.dof()) throw DimensionError("verify_minimax: bounds/chain mismatch");
  if (chain.capsules().empty()) throw ConfigError("verify_minimax: chain has no capsules");

  std::vector<int> capsules = config.capsules;
  if (capsules.empty()) capsules.push_back(static_cast<int>(chain.capsules().size()) - 1);
  for (int c : capsules) {
    if (c < 0 || c >= static_cast<int>(chain.capsules().size())) {
      throw ConfigError("verify_minimax: unknown capsule index " + std::to_string(c));
    }
  }

  const int n = chain.dof();
  const VecX lo = chain.lower_limits();
  const VecX hi = chain.upper_limits();
  const double l1 = params.lambda1;
  const double l2 = params.lambda2;
  const int strata = std::max(1, config.strata);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  MinimaxReport report;
  report.worst_value = -std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < config.budget; ++i) {
    MinimaxSample s;
    const double stratum = static_cast<double>(i % static_cast<std::size_t>(strata));
    s.d = params.d_min + (stratum + unit(rng)) / strata * (config.d_max - params.d_min);
    s.d_dot = uniform(-config.relative_speed, config.relative_speed);
    if (l2 != 0.0) {
      s.d_ddot = (params.d_min * params.d_min - s.d * s.d - l1 * s.d_dot) / l2;
    } else {
      s.d_ddot = uniform(-config.relative_accel, config.relative_accel);
      if (l1 != 0.0) {
        s.d_dot = (params.d_min * params.d_min - s.d * s.d) / l1;
      } else {
        s.d = params.d_min;
      }
    }

    s.theta.resize(n);
    s.theta_dot.resize(n);
    for (int j = 0; j < n; ++j) {
      s.theta[j] = uniform(lo[j], hi[j]);
      s.theta_dot[j] = config.joint_speed > 0.0 ? uniform(-config.joint_speed, config.joint_speed) : 0.0;
    }
    s.capsule = capsules[i % capsules.size()];
    const auto& att = chain.capsules()[static_cast<std::size_t>(s.capsule)];
    s.local_point = att.p0 + unit(rng) * (att.p1 - att.p0);
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    while (dir.norm() < 1e-9) dir = Vec3(normal(rng), normal(rng), normal(rng));
    s.direction = dir.normalized();

    // Collinear relative motion along the separation direction: the agent (constant
    // velocity) absorbs the robot velocity, the robot supplies the relative acceleration.
    JointState q{s.theta, s.theta_dot, VecX::Zero(n)};
    PointJacobianBundle bundle = chain.point_jacobian_bundle(q, att.frame, s.local_point);
    const Vec3 accel_needed = s.d_ddot * s.direction - bundle.J_dot * s.theta_dot;
    const Eigen::MatrixXd jjt = bundle.J * bundle.J.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jjt);
    s.theta_ddot = bundle.J.transpose() * ldlt.solve(accel_needed);
    const bool solved = (bundle.J * s.theta_ddot - accel_needed).norm() <= 1e-6 * (1.0 + accel_needed.norm());
    if (!solved || !s.theta_ddot.allFinite() || s.theta_ddot.cwiseAbs().maxCoeff() > config.joint_accel) {
      ++report.unreachable;
      continue;
    }
    q.theta_ddot = s.theta_ddot;
    bundle = chain.point_jacobian_bundle(q, att.frame, s.local_point);
    const Vec3 drift = bundle.J_ddot * s.theta_dot + 2.0 * bundle.J_dot * s.theta_ddot;
    const Eigen::RowVectorXd c = s.direction.transpose() * bundle.J;

    // With collinear motion d_dddot = n . j, so the inner minimum is attained at the box
    // vertex maximizing n . J u.
    s.value = -2.0 * s.d * s.d_dot - l1 * s.d_ddot - l2 * s.direction.dot(drift);
    if (l2 != 0.0) s.value -= std::abs(l2) * (l2 > 0.0 ? box_support(c, bounds) : box_support(-c, bounds));

    ++report.evaluated;
    if (s.value > report.worst_value) {
      report.worst_value = s.value;
      report.worst = s;
    }
  }
  report.passed = report.evaluated > 0 && report.worst_value <= 0.0;
  return report;
}

std::vector<SurfaceSample> export_phase_surface(const SafetyIndexParams& params,
                                                const SurfaceGrid& grid) {
  const auto axis = [](double lo, double hi, int n, int k) {
    return n <= 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  std::vector<SurfaceSample> out;
  const auto push = [&](double d, double dd, double ddd) {
    out.push_back({d, dd, ddd, phi(params, d, dd, ddd), params.lambda1, params.lambda2, params.d_min});
  };
  if (params.lambda2 != 0.0) {
    for (int i = 0; i < grid.d_n; ++i) {
      for (int j = 0; j < grid.d_dot_n; ++j) {
        const double d = axis(grid.d_lo, grid.d_hi, grid.d_n, i);
        const double dd = axis(grid.d_dot_lo, grid.d_dot_hi, grid.d_dot_n, j);
        push(d, dd, trigger_threshold_d_ddot(params, d, dd));
      }
    }
  } else if (params.lambda1 != 0.0) {
    for (int i = 0; i < grid.d_n; ++i) {
      for (int k = 0; k < grid.d_ddot_n; ++k) {
        const double d = axis(grid.d_lo, grid.d_hi, grid.d_n, i);
        const double ddd = axis(grid.d_ddot_lo, grid.d_ddot_hi, grid.d_ddot_n, k);
        push(d, trigger_threshold_d_dot(params, d, ddd), ddd);
      }
    }
  }
  for (int j = 0; j < grid.d_dot_n; ++j) {
    for (int k = 0; k < grid.d_ddot_n; ++k) {
      push(params.d_min, axis(grid.d_dot_lo, grid.d_dot_hi, grid.d_dot_n, j),
           axis(grid.d_ddot_lo, grid.d_ddot_hi, grid.d_ddot_n, k));
    }
  }
  return out;
}

void write_surface_csv(std::ostream& out, const std::vector<SurfaceSample>& samples) {
  out << "d,d_dot,d_ddot,phi,lambda1,lambda2,d_min\n";
  const auto old_precision = out.precision(17);
  for (const auto& s : samples) {
    out << s.d << ',' << s.d_dot << ',' << s.d_ddot << ',' << s.phi << ',' << s.lambda1 << ','
        << s.lambda2 << ',' << s.d_min << '\n';
  }
  out.precision(old_precision);
}

}  // namespace jssa
