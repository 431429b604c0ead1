#pragma once

#include <Eigen/Dense>

#include <vector>

#include "pointing/model.hpp"

namespace pointing {

/// Backward pass aborts when any gain entry exceeds this magnitude; such
/// parameter sets produce erroneous optimal-control calculations.
inline constexpr double kGainGuard = 1e12;

/// Time-varying feedback law and Riccati value matrices.
///
/// gains[i] is K_{i+1} (steps 1..N-1); value_matrices[i] is S_{i+1}
/// (steps 1..N). S_N equals the terminal state-cost matrix exactly and
/// every S_n is symmetric positive semidefinite.
struct GainSchedule {
  std::vector<Eigen::Matrix<double, 1, 4>> gains;
  std::vector<Eigen::Matrix4d> value_matrices;
  double stiffness = 0.0;  ///< plant k the schedule was solved for

  int horizon() const noexcept { return static_cast<int>(value_matrices.size()); }
};

/// Solves the modified discrete Riccati equations backward from S_N = Q_N:
///
///   S_n = Q_n + Iu^T R_n Iu + calA^T S_{n+1} calA
///         - (calA^T S_{n+1} calB - Iu^T R_n) (R_n + calB^T S_{n+1} calB)^{-1}
///           (calB^T S_{n+1} calA - R_n Iu)
///
/// and returns the feedback gains
///
///   K_n = (R_n + calB^T S_{n+1} calB)^{-1} (calB^T S_{n+1} calA - R_n Iu).
///
/// The scalar pivot R_n + calB^T S_{n+1} calB is strictly positive for
/// R_n > 0 and S psd; a non-positive pivot or a gain beyond kGainGuard
/// raises numerical_error carrying the offending step.
GainSchedule solve_riccati(const AugmentedSystem& sys, const CostSpec& spec);

/// Closed-loop rollout of u*_n = -K_n I_n, I_{n+1} = calA I_n + calB u*_n
/// from I_1 = (x1, u0). Returns positions/velocities extracted via Ix,
/// the applied controls, and accelerations reconstructed from the state
/// equation. `horizon` must match the gain schedule.
Trajectory simulate_lqr(const GainSchedule& gains, const AugmentedSystem& sys,
                        const Eigen::Vector3d& x1, double u0, int horizon);

/// Value of the optimum from the given start: I_1^T S_1 I_1. Evaluated in
/// the equilibrium-shifted variable I_1 - (T, 0, T, kT), which spans the
/// exact kernel of S_1; this removes the catastrophic cancellation the raw
/// quadratic form suffers for large u0 or stiff plants.
double optimal_cost(const GainSchedule& gains, const Eigen::Vector3d& x1, double u0);

/// Horizon cap for the dense verification oracle below.
inline constexpr int kOracleHorizonBound = 64;

/// Verification oracle: solves the same problem as solve_riccati +
/// simulate_lqr by assembling the full quadratic form in the N-1 control
/// variables and solving the normal equations, with no Riccati recursion
/// involved. Refuses horizons above `max_horizon` (dense, test-scale only).
std::vector<double> brute_force_optimal_controls(const AugmentedSystem& sys,
                                                 const CostSpec& spec,
                                                 const Eigen::Vector3d& x1, double u0,
                                                 int max_horizon = kOracleHorizonBound);

}  // namespace pointing
