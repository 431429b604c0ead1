#include "pointing/lqr.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pointing/errors.hpp"

namespace pointing {

namespace {

std::string describe_system(const AugmentedSystem& sys) {
  return "k=" + std::to_string(sys.stiffness()) + ", d=" + std::to_string(sys.damping()) +
         ", h=" + std::to_string(sys.h);
}

}  // namespace

GainSchedule solve_riccati(const AugmentedSystem& sys, const CostSpec& spec) {
  const int n_steps = spec.horizon;
  if (n_steps < 2) throw std::invalid_argument("solve_riccati: horizon must be >= 2");
  if (static_cast<int>(spec.q_active.size()) != n_steps ||
      static_cast<int>(spec.r_schedule.size()) != n_steps - 1)
    throw std::invalid_argument("solve_riccati: cost schedules inconsistent with horizon");

  // Internally the control-difference penalty is eliminated by the exact
  // substitution w_n = u_n - u_{n-1}: the plant becomes
  // A~ = calA + calB Iu (previous control held), the state cost stays Q_n
  // and the control cost R_n acts on w. The update is then evaluated in
  // Joseph form,
  //   S_n = Q_n + G_n^T R_n G_n + (A~ - calB G_n)^T S_{n+1} (A~ - calB G_n),
  // a sum of psd terms with no cancellation, which matters for variant 3
  // whose pre-onset weights span five orders of magnitude. The paper-form
  // gain follows as K_n = G_n - Iu.
  const Eigen::Matrix<double, 1, 4> iu = sys.Iu;
  const Eigen::Vector4d b = sys.B;
  const Eigen::Matrix4d a_hold = sys.A + b * iu;

  GainSchedule sched;
  sched.stiffness = sys.stiffness();
  sched.gains.resize(static_cast<std::size_t>(n_steps - 1));
  sched.value_matrices.resize(static_cast<std::size_t>(n_steps));

  Eigen::Matrix4d s_next = spec.state_cost(static_cast<std::size_t>(n_steps - 1));
  sched.value_matrices.back() = s_next;

  for (int n = n_steps - 1; n >= 1; --n) {
    const double r_n = spec.r_schedule[static_cast<std::size_t>(n - 1)];
    if (!(r_n > 0.0))
      throw std::invalid_argument("solve_riccati: R_n must be > 0 at step " +
                                  std::to_string(n));

    const double pivot = r_n + b.dot(s_next * b);
    if (!(pivot > 0.0) || !std::isfinite(pivot))
      throw numerical_error("solve_riccati: non-positive pivot at step " +
                                std::to_string(n) + " (" + describe_system(sys) + ")",
                            n);

    const Eigen::Matrix<double, 1, 4> g = (b.transpose() * s_next * a_hold) / pivot;
    const Eigen::Matrix<double, 1, 4> gain_row = g - iu;  // K_n of the original problem
    if (gain_row.cwiseAbs().maxCoeff() > kGainGuard)
      throw numerical_error("solve_riccati: gain guard exceeded at step " +
                                std::to_string(n) + " (" + describe_system(sys) + ")",
                            n);

    const Eigen::Matrix4d closed = a_hold - b * g;
    Eigen::Matrix4d s = spec.state_cost(static_cast<std::size_t>(n - 1)) +
                        r_n * (g.transpose() * g) +
                        closed.transpose() * s_next * closed;
    // Symmetrize to suppress drift over long horizons.
    s = 0.5 * (s + s.transpose()).eval();

    sched.gains[static_cast<std::size_t>(n - 1)] = gain_row;
    sched.value_matrices[static_cast<std::size_t>(n - 1)] = s;
    s_next = s;
  }
  return sched;
}

Trajectory simulate_lqr(const GainSchedule& gains, const AugmentedSystem& sys,
                        const Eigen::Vector3d& x1, double u0, int horizon) {
  if (horizon != gains.horizon())
    throw std::invalid_argument("simulate_lqr: horizon does not match gain schedule");

  const double k = sys.stiffness();
  const double d = sys.damping();
  const std::size_t n = static_cast<std::size_t>(horizon);

  Trajectory traj;
  traj.step = sys.h;
  traj.positions.reserve(n);
  traj.velocities.reserve(n);
  traj.accelerations.reserve(n);
  traj.controls.reserve(n - 1);

  Eigen::Vector4d info;
  info << x1(0), x1(1), x1(2), u0;

  for (std::size_t i = 0; i < n; ++i) {
    traj.positions.push_back(info(0));
    traj.velocities.push_back(info(1));
    if (i + 1 < n) {
      const double u = -gains.gains[i].dot(info);
      if (!std::isfinite(u))
        throw numerical_error("simulate_lqr: non-finite control at step " +
                                  std::to_string(i + 1) + " (" + describe_system(sys) + ")",
                              static_cast<int>(i + 1));
      traj.controls.push_back(u);
      traj.accelerations.push_back(u - k * info(0) - d * info(1));
      info = sys.A * info + sys.B * u;
    } else {
      traj.accelerations.push_back(traj.controls.back() - k * info(0) - d * info(1));
    }
  }
  return traj;
}

double optimal_cost(const GainSchedule& gains, const Eigen::Vector3d& x1, double u0) {
  if (gains.value_matrices.empty())
    throw std::invalid_argument("optimal_cost: empty gain schedule");
  const Eigen::Matrix4d& s1 = gains.value_matrices.front();
  const double target = x1(2);

  // (T, 0, T, kT) is cost-free forever, so it lies in the kernel of S_1 and
  // I^T S I == delta^T S delta for delta = I - (T, 0, T, kT). delta's third
  // component is zero, leaving a 3x3 form over modest-sized deviations.
  // The differences are taken in double so an equilibrium start cancels to
  // exactly zero; only the accumulation is extended.
  const long double delta[3] = {x1(0) - target, x1(1),
                                u0 - gains.stiffness * target};
  constexpr int index[3] = {0, 1, 3};

  long double total = 0.0L;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      total += s1(index[a], index[b]) * delta[a] * delta[b];
  return static_cast<double>(total);
}

std::vector<double> brute_force_optimal_controls(const AugmentedSystem& sys,
                                                 const CostSpec& spec,
                                                 const Eigen::Vector3d& x1, double u0,
                                                 int max_horizon) {
  const int n_steps = spec.horizon;
  if (n_steps > max_horizon)
    throw std::invalid_argument("brute_force_optimal_controls: horizon " +
                                std::to_string(n_steps) + " above oracle bound " +
                                std::to_string(max_horizon));
  if (n_steps < 2) throw std::invalid_argument("brute_force_optimal_controls: horizon < 2");

  const int n_controls = n_steps - 1;

  // Propagate I_n = base_n + M_n u affinely in the stacked control vector u,
  // then assemble J(u) = u^T H u + 2 g^T u + const from the cost schedules.
  Eigen::Vector4d base;
  base << x1(0), x1(1), x1(2), u0;
  Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(4, n_controls);

  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n_controls, n_controls);
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(n_controls);

  for (int n = 1; n <= n_steps; ++n) {
    if (spec.q_active[static_cast<std::size_t>(n - 1)]) {
      // (T - p_n)^2 with p_n = base(0) + coeff.row(0) u and T constant
      // (third state component is target-invariant under calA).
      const double offset = base(0) - base(2);
      const Eigen::RowVectorXd row = coeff.row(0) - coeff.row(2);
      hess += row.transpose() * row;
      lin += offset * row.transpose();
    }
    if (n < n_steps) {
      const double r_n = spec.r_schedule[static_cast<std::size_t>(n - 1)];
      // (u_n - u_{n-1})^2; u_{n-1} is the fourth information component.
      Eigen::RowVectorXd diff = -coeff.row(3);
      diff(n - 1) += 1.0;
      const double offset = -base(3);
      hess += r_n * diff.transpose() * diff;
      lin += r_n * offset * diff.transpose();

      // Advance the affine map: I_{n+1} = calA I_n + calB u_n.
      base = sys.A * base;
      coeff = sys.A * coeff;
      coeff.col(n - 1) += sys.B;
    }
  }

  const Eigen::VectorXd solution = Eigen::LDLT<Eigen::MatrixXd>(hess).solve(-lin);
  return {solution.data(), solution.data() + solution.size()};
}

}  // namespace pointing
