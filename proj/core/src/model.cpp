#include "pointing/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pointing {

void ModelParams::validate() const {
  if (!(k > 0.0)) throw std::invalid_argument("ModelParams: k must be > 0");
  if (!(d > 0.0)) throw std::invalid_argument("ModelParams: d must be > 0");
  if (!(r > 0.0)) throw std::invalid_argument("ModelParams: r must be > 0");
  if (delta && !(*delta >= 0.0))
    throw std::invalid_argument("ModelParams: delta must be >= 0");
}

void TaskSpec::validate() const {
  if (!(target_width > 0.0))
    throw std::invalid_argument("TaskSpec: target width must be > 0");
  if (initial_distance != 0.0 && index_of_difficulty != 0.0) {
    const double expected = std::log2(initial_distance / target_width + 1.0);
    if (std::abs(expected - index_of_difficulty) > 1e-9)
      throw std::invalid_argument(
          "TaskSpec: ID does not match log2(D/W + 1): expected " +
          std::to_string(expected) + ", got " + std::to_string(index_of_difficulty));
  }
}

void Trajectory::validate() const {
  const std::size_t n = positions.size();
  if (n < 2) throw std::invalid_argument("Trajectory: need at least 2 samples");
  if (!(step > 0.0)) throw std::invalid_argument("Trajectory: step must be > 0");
  if (!velocities.empty() && velocities.size() != n)
    throw std::invalid_argument("Trajectory: velocity series length mismatch");
  if (!accelerations.empty() && accelerations.size() != n)
    throw std::invalid_argument("Trajectory: acceleration series length mismatch");
  if (!controls.empty() && controls.size() != n - 1)
    throw std::invalid_argument("Trajectory: control series must have N-1 samples");
}

DynamicsMatrices build_dynamics(const ModelParams& params, double h) {
  // k = d = 0 (a double integrator) is a legitimate degenerate plant, so
  // the full ModelParams invariant is not enforced here.
  if (!(h > 0.0)) throw std::invalid_argument("build_dynamics: h must be > 0");

  DynamicsMatrices dyn;
  dyn.h = h;
  dyn.k = params.k;
  dyn.d = params.d;
  dyn.A << 1.0, h, 0.0,
      -h * params.k, 1.0 - h * params.d, 0.0,
      0.0, 0.0, 1.0;
  dyn.B << 0.0, h, 0.0;
  return dyn;
}

AugmentedSystem augment_system(const DynamicsMatrices& dyn) {
  AugmentedSystem sys;
  sys.h = dyn.h;
  sys.k = dyn.k;
  sys.d = dyn.d;
  sys.A.setZero();
  sys.A.topLeftCorner<3, 3>() = dyn.A;
  sys.B << dyn.B(0), dyn.B(1), dyn.B(2), 1.0;
  sys.Ix.setZero();
  sys.Ix(0, 0) = sys.Ix(1, 1) = sys.Ix(2, 2) = 1.0;
  sys.Iu.setZero();
  sys.Iu(0, 3) = 1.0;
  return sys;
}

Eigen::Matrix4d CostSpec::distance_block() {
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  q(0, 0) = 1.0;
  q(0, 2) = -1.0;
  q(2, 0) = -1.0;
  q(2, 2) = 1.0;
  return q;
}

Eigen::Matrix4d CostSpec::state_cost(std::size_t i) const {
  return q_active.at(i) ? distance_block() : Eigen::Matrix4d::Zero();
}

double jerk_weight_f(int n, int n_delta, double c) {
  if (n_delta < 2) throw std::domain_error("jerk_weight_f: n_delta must be >= 2");
  if (!(c > 1.0)) throw std::domain_error("jerk_weight_f: c must be > 1");
  if (n < 1 || n >= n_delta)
    throw std::domain_error("jerk_weight_f: n outside the pre-movement range {1..n_delta-1}");
  const double exponent = 1.0 / static_cast<double>(n_delta - 1) -
                          1.0 / static_cast<double>(n_delta - n);
  return (c - 1.0) * std::exp(exponent) + 1.0;
}

namespace {

// Step whose time t_n = (n-1)h lies closest to delta, ties toward the
// earlier step, clamped to {1..N}.
int onset_step_for_delta(double delta, double h, int horizon) {
  const double steps = delta / h;
  int n = 1 + static_cast<int>(std::ceil(steps - 0.5));
  if (n < 1) n = 1;
  if (n > horizon) n = horizon;
  return n;
}

}  // namespace

CostSpec build_cost(CostVariant variant, const ModelParams& params, int horizon,
                    double h, double premove_multiplier) {
  if (!(params.r > 0.0)) throw std::invalid_argument("build_cost: r must be > 0");
  if (!(h > 0.0)) throw std::invalid_argument("build_cost: h must be > 0");
  if (horizon < 2) throw std::invalid_argument("build_cost: horizon must be >= 2");

  CostSpec spec;
  spec.variant = variant;
  spec.horizon = horizon;
  spec.q_active.assign(static_cast<std::size_t>(horizon), 0);
  const double r_base = params.r / (h * h);
  spec.r_schedule.assign(static_cast<std::size_t>(horizon - 1), r_base);

  switch (variant) {
    case CostVariant::kLqr1:
      spec.q_active.back() = 1;
      break;
    case CostVariant::kLqr2:
      spec.q_active.assign(static_cast<std::size_t>(horizon), 1);
      break;
    case CostVariant::kLqr3: {
      if (!params.delta || !(*params.delta >= 0.0))
        throw std::invalid_argument("build_cost: variant 3 requires params.delta >= 0");
      if (!(premove_multiplier > 1.0))
        throw std::invalid_argument("build_cost: variant 3 requires c > 1");
      spec.premove_multiplier = premove_multiplier;
      spec.onset_step = onset_step_for_delta(*params.delta, h, horizon);
      for (int n = spec.onset_step; n <= horizon; ++n)
        spec.q_active[static_cast<std::size_t>(n - 1)] = 1;
      for (int n = 1; n < spec.onset_step && n <= horizon - 1; ++n)
        spec.r_schedule[static_cast<std::size_t>(n - 1)] =
            jerk_weight_f(n, spec.onset_step, premove_multiplier) * r_base;
      break;
    }
  }
  return spec;
}

double initial_control(const ModelParams& params, double p1, double v1, double a1) {
  return params.k * p1 + params.d * v1 + a1;
}

double evaluate_cost(const CostSpec& spec, const Trajectory& traj, double target,
                     double u0) {
  const std::size_t n = traj.samples();
  if (static_cast<int>(n) != spec.horizon)
    throw std::invalid_argument("evaluate_cost: trajectory length does not match horizon");
  if (traj.controls.size() != n - 1)
    throw std::invalid_argument("evaluate_cost: need N-1 controls");

  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.q_active[i]) {
      const double dist = target - traj.positions[i];
      cost += dist * dist;
    }
  }
  double u_prev = u0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double du = traj.controls[i] - u_prev;
    cost += spec.r_schedule[i] * du * du;
    u_prev = traj.controls[i];
  }
  return cost;
}

Trajectory rollout(const DynamicsMatrices& dyn, const Eigen::Vector3d& x1,
                   std::span<const double> controls) {
  const std::size_t n = controls.size() + 1;
  if (n < 2) throw std::invalid_argument("rollout: need at least one control");

  const double k = dyn.stiffness();
  const double d = dyn.damping();

  Trajectory traj;
  traj.step = dyn.h;
  traj.positions.reserve(n);
  traj.velocities.reserve(n);
  traj.accelerations.reserve(n);
  traj.controls.assign(controls.begin(), controls.end());

  Eigen::Vector3d x = x1;
  for (std::size_t i = 0; i < n; ++i) {
    traj.positions.push_back(x(0));
    traj.velocities.push_back(x(1));
    const double u = (i < controls.size()) ? controls[i] : controls.back();
    traj.accelerations.push_back(u - k * x(0) - d * x(1));
    if (i < controls.size()) x = dyn.A * x + dyn.B * controls[i];
  }
  return traj;
}

}  // namespace pointing
