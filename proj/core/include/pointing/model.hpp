#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pointing {

/// Parameters of the second-order-lag pointer plant plus the jerk weight of
/// the LQR cost. Mass is fixed to 1 and is not a parameter.
struct ModelParams {
  double k = 0.0;  ///< spring stiffness [1/s^2], > 0
  double d = 0.0;  ///< damping [1/s], > 0
  double r = 0.0;  ///< jerk weight, > 0
  std::optional<double> delta;  ///< reaction time [s], >= 0; variant 3 only

  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;
};

enum class Direction : std::uint8_t { kLeft, kRight };

/// One pointing task: a target of width W at distance D from the start.
struct TaskSpec {
  double target_center = 0.0;        ///< T [m]
  double target_width = 0.0;         ///< W [m], > 0
  double initial_distance = 0.0;     ///< D [m]
  double index_of_difficulty = 0.0;  ///< ID = log2(D/W + 1) [bits]
  Direction direction = Direction::kRight;

  /// Checks W > 0 and, when D, W and ID are all set, that ID matches
  /// log2(D/W + 1) to 1e-9.
  void validate() const;
};

/// Uniformly sampled pointer time series for one trial. Velocity,
/// acceleration and control series are optional (empty when absent);
/// any non-empty series must have the same length as `positions`,
/// except `controls` which holds one element fewer (u_n drives the
/// transition from sample n to n+1).
struct Trajectory {
  double step = 0.0;        ///< h [s], > 0
  double start_time = 0.0;  ///< time of the first sample [s]
  std::vector<double> positions;      ///< p_n [m]
  std::vector<double> velocities;     ///< v_n [m/s]
  std::vector<double> accelerations;  ///< a_n [m/s^2]
  std::vector<double> controls;       ///< u_n [m/s^2], size N-1 when present

  std::size_t samples() const noexcept { return positions.size(); }
  double time_at(std::size_t i) const { return start_time + step * static_cast<double>(i); }

  /// Throws std::invalid_argument on length or step violations.
  void validate() const;
};

/// Forward-Euler discretization of the second-order lag:
///   A = [[1, h, 0], [-hk, 1-hd, 0], [0, 0, 1]],  B = (0, h, 0)^T
/// acting on the state x = (p, v, T)^T.
struct DynamicsMatrices {
  Eigen::Matrix3d A;
  Eigen::Vector3d B;
  double h = 0.0;
  double k = 0.0;  ///< stiffness embedded in A, kept exact
  double d = 0.0;  ///< damping embedded in A

  double stiffness() const { return k; }
  double damping() const { return d; }
};

/// The plant lifted onto information vectors I_n = (p_n, v_n, T, u_{n-1})^T
/// so that differences of consecutive controls become penalizable:
///   I_{n+1} = calA I_n + calB u_n
/// stores u_n in the fourth component. Ix and Iu extract the 3-state and
/// the previous control.
struct AugmentedSystem {
  Eigen::Matrix4d A;                ///< calA = [[A, 0], [0, 0]]
  Eigen::Vector4d B;                ///< calB = (B^T, 1)^T
  Eigen::Matrix<double, 3, 4> Ix;   ///< state extractor
  Eigen::Matrix<double, 1, 4> Iu;   ///< previous-control extractor
  double h = 0.0;
  double k = 0.0;
  double d = 0.0;

  double stiffness() const { return k; }
  double damping() const { return d; }
};

/// Which of the three cost-function iterations is in effect.
enum class CostVariant : std::uint8_t {
  kLqr1,  ///< distance penalized at the final step only
  kLqr2,  ///< distance penalized at every step
  kLqr3,  ///< reaction-time split: no distance and inflated jerk cost before onset
};

inline constexpr double kDefaultPremoveMultiplier = 100000.0;

/// Per-step cost schedules for one variant over horizon N.
///
/// Index convention: q_active[i] refers to step n = i+1 (i in 0..N-1) and
/// r_schedule[i] is the weight R_{i+1} on (u_{i+1} - u_i)^2 (i in 0..N-2).
/// An active state cost contributes (T - p_n)^2; the R values already carry
/// the 1/h^2 jerk scaling.
struct CostSpec {
  CostVariant variant = CostVariant::kLqr2;
  int horizon = 0;                    ///< N, >= 2
  std::vector<std::uint8_t> q_active; ///< size N
  std::vector<double> r_schedule;     ///< size N-1, all > 0
  double premove_multiplier = 0.0;    ///< c, variant 3 only
  int onset_step = 1;                 ///< n_delta (1-based), variant 3 only

  /// The nonzero block of an active state-cost matrix, rows/cols of
  /// (p, v, T, u_prev); I^T Q I = (T - p)^2.
  static Eigen::Matrix4d distance_block();

  /// 4x4 state-cost matrix for sample index i (0-based).
  Eigen::Matrix4d state_cost(std::size_t i) const;
};

/// Builds A and B for the given parameters and step size.
/// Throws std::invalid_argument for h <= 0 or invalid params.
DynamicsMatrices build_dynamics(const ModelParams& params, double h);

/// Lifts the plant onto information vectors.
AugmentedSystem augment_system(const DynamicsMatrices& dyn);

/// Builds the cost schedules for the requested variant.
///
/// For kLqr3, params.delta must be present; the onset step n_delta is the
/// step whose time t_n = (n-1)h is closest to delta (ties toward the earlier
/// step), clamped to {1..N}, and the pre-onset jerk weights follow
/// jerk_weight_f with multiplier c.
CostSpec build_cost(CostVariant variant, const ModelParams& params, int horizon,
                    double h, double premove_multiplier = kDefaultPremoveMultiplier);

/// Smoothed pre-movement jerk multiplier
///   f(n) = (c - 1) exp(1/(n_delta - 1) - 1/(n_delta - n)) + 1
/// for 1-based steps n in {1..n_delta-1}; f(1) = c and f decreases toward 1.
/// Throws std::domain_error for n outside the pre-movement range.
double jerk_weight_f(int n, int n_delta, double c);

/// Control that reproduces a measured initial acceleration:
///   u_0 = k p_1 + d v_1 + a_1.
double initial_control(const ModelParams& params, double p1, double v1, double a1);

/// Evaluates the cost functional on a trajectory with controls:
///   sum_n [Q_n active] (T - p_n)^2  +  sum_n R_n (u_n - u_{n-1})^2
/// with u_0 supplied by the caller. Throws std::invalid_argument when the
/// trajectory length does not match the spec horizon.
double evaluate_cost(const CostSpec& spec, const Trajectory& traj, double target,
                     double u0);

/// Open-loop rollout of x_{n+1} = A x_n + B u_n from x1 = (p1, v1, T).
/// Returns all series; accelerations are reconstructed from the state
/// equation (a_n = u_n - k p_n - d v_n, the final sample reusing the last
/// control).
Trajectory rollout(const DynamicsMatrices& dyn, const Eigen::Vector3d& x1,
                   std::span<const double> controls);

}  // namespace pointing
