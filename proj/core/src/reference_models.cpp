#include "pointing/reference_models.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "pointing/errors.hpp"

namespace pointing {

Trajectory simulate_2ol_eq(double k, double d, double h, double p1, double v1,
                           double target, int horizon) {
  if (horizon < 2) throw std::invalid_argument("simulate_2ol_eq: horizon must be >= 2");
  const ModelParams params{.k = k, .d = d, .r = 1.0, .delta = std::nullopt};
  const DynamicsMatrices dyn = build_dynamics(params, h);
  const std::vector<double> controls(static_cast<std::size_t>(horizon - 1), k * target);
  return rollout(dyn, Eigen::Vector3d(p1, v1, target), controls);
}

MinJerkCoefficients minjerk_coefficients(double p1, double v1, double a1,
                                         double p_tf, double v_tf, double a_tf,
                                         double t_f, double h) {
  if (!(t_f > 0.0)) throw std::invalid_argument("minjerk_coefficients: t_f must be > 0");
  if (!(h > 0.0)) throw std::invalid_argument("minjerk_coefficients: h must be > 0");

  MinJerkCoefficients mj;
  mj.final_time = t_f;
  mj.final_step = 1 + static_cast<int>(std::lround(t_f / h));

  mj.c[0] = p1;
  mj.c[1] = v1 * t_f;
  mj.c[2] = a1 * t_f * t_f / 2.0;

  Eigen::Matrix3d lhs;
  lhs << 1, 1, 1,
      3, 4, 5,
      6, 12, 20;
  Eigen::Vector3d rhs(p_tf - mj.c[0] - mj.c[1] - mj.c[2],
                      v_tf * t_f - mj.c[1] - 2.0 * mj.c[2],
                      a_tf * t_f * t_f - 2.0 * mj.c[2]);
  const Eigen::Vector3d tail = lhs.fullPivLu().solve(rhs);
  mj.c[3] = tail(0);
  mj.c[4] = tail(1);
  mj.c[5] = tail(2);
  return mj;
}

Trajectory minjerk_trajectory(const MinJerkCoefficients& coeffs, double h, int horizon) {
  const int segment = coeffs.final_step;
  if (segment < 2)
    throw std::invalid_argument("minjerk_trajectory: segment must span at least 2 steps");
  if (horizon < segment)
    throw std::invalid_argument("minjerk_trajectory: horizon shorter than the segment");

  Trajectory traj;
  traj.step = h;
  traj.positions.reserve(static_cast<std::size_t>(horizon));
  traj.velocities.reserve(static_cast<std::size_t>(horizon));
  traj.accelerations.reserve(static_cast<std::size_t>(horizon));

  const double t_f = coeffs.final_time;
  for (int n = 1; n <= segment; ++n) {
    const double tau = static_cast<double>(n - 1) / static_cast<double>(segment - 1);
    double pos = 0.0, d_tau = 0.0, dd_tau = 0.0;
    for (int i = 5; i >= 0; --i) {
      // Horner evaluation of the polynomial and its tau-derivatives.
      pos = pos * tau + coeffs.c[static_cast<std::size_t>(i)];
      if (i >= 1) d_tau = d_tau * tau + static_cast<double>(i) * coeffs.c[static_cast<std::size_t>(i)];
      if (i >= 2)
        dd_tau = dd_tau * tau +
                 static_cast<double>(i) * static_cast<double>(i - 1) * coeffs.c[static_cast<std::size_t>(i)];
    }
    traj.positions.push_back(pos);
    traj.velocities.push_back(d_tau / t_f);
    traj.accelerations.push_back(dd_tau / (t_f * t_f));
  }
  const double hold = traj.positions.back();
  for (int n = segment + 1; n <= horizon; ++n) {
    traj.positions.push_back(hold);
    traj.velocities.push_back(0.0);
    traj.accelerations.push_back(0.0);
  }
  return traj;
}

int detect_surge_end(const std::vector<double>& accelerations, Direction direction,
                     SurgeEndInfo* info) {
  if (accelerations.empty())
    throw std::invalid_argument("detect_surge_end: empty acceleration series");

  bool any_nonzero = false;
  for (double a : accelerations)
    if (a != 0.0) {
      any_nonzero = true;
      break;
    }
  if (!any_nonzero) throw no_surge_error("detect_surge_end: all-zero acceleration series");

  // Mirror the sign convention so the surge always looks like: positive
  // acceleration phase, negative deceleration phase, zero crossing.
  const double sign = (direction == Direction::kRight) ? 1.0 : -1.0;
  const std::size_t n = accelerations.size();
  const int last_step = static_cast<int>(n);

  std::size_t peak = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (sign * accelerations[i] > sign * accelerations[peak]) peak = i;

  std::size_t decel_start = n;
  for (std::size_t i = peak + 1; i < n; ++i)
    if (sign * accelerations[i] < 0.0) {
      decel_start = i;
      break;
    }

  if (info) {
    info->crossing_found = false;
    info->deceleration_start =
        (decel_start < n) ? static_cast<int>(decel_start) + 1 : 0;
  }
  if (decel_start == n) return last_step;

  for (std::size_t i = decel_start + 1; i < n; ++i) {
    if (sign * accelerations[i] >= 0.0) {
      if (info) info->crossing_found = true;
      return static_cast<int>(i) + 1;
    }
  }
  return last_step;
}

}  // namespace pointing
