#pragma once

#include <array>
#include <vector>

#include "pointing/model.hpp"

namespace pointing {

/// Second-order lag driven by the constant equilibrium control u = kT.
/// The target (with zero velocity) is a stable equilibrium of the closed
/// loop; the control series is constant.
Trajectory simulate_2ol_eq(double k, double d, double h, double p1, double v1,
                           double target, int horizon);

/// Fifth-degree minimum-jerk polynomial p(t) = sum_i c_i (t/t_f)^i over one
/// movement segment of final_step samples (t_f = (final_step - 1) h).
struct MinJerkCoefficients {
  std::array<double, 6> c{};  ///< c0..c5 [m]
  double final_time = 0.0;    ///< t_f [s]
  int final_step = 0;         ///< N_tilde, last step of the segment (1-based)
};

/// Solves for the polynomial coefficients under general boundary conditions.
/// c0..c2 come directly from the start boundary (c0 = p1, c1 = v1 t_f,
/// c2 = a1 t_f^2 / 2); c3..c5 solve
///   [[1,1,1],[3,4,5],[6,12,20]] (c3,c4,c5)^T =
///   (p_tf - c0 - c1 - c2, v_tf t_f - c1 - 2 c2, a_tf t_f^2 - 2 c2)^T.
MinJerkCoefficients minjerk_coefficients(double p1, double v1, double a1,
                                         double p_tf, double v_tf, double a_tf,
                                         double t_f, double h);

/// Samples the polynomial at steps 1..final_step and continues with the
/// final position (zero velocity/acceleration) up to `horizon`. Velocity
/// and acceleration inside the segment come from analytic differentiation.
Trajectory minjerk_trajectory(const MinJerkCoefficients& coeffs, double h, int horizon);

/// Extra detail from surge-end detection.
struct SurgeEndInfo {
  bool crossing_found = false;  ///< false when the last-step fallback fired
  int deceleration_start = 0;   ///< first step with deceleration sign (1-based), 0 if none
};

/// End of the surge: the first step after the deceleration phase at which
/// the acceleration has left the deceleration sign (first zero-crossing in
/// a sampled-data reading; no interpolation). For rightward movements the
/// deceleration sign is negative, for leftward positive. Returns the last
/// step when no such crossing exists; throws no_surge_error for an
/// all-zero series. The returned step is 1-based.
int detect_surge_end(const std::vector<double>& accelerations, Direction direction,
                     SurgeEndInfo* info = nullptr);

}  // namespace pointing
