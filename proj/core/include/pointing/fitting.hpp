#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pointing/data_pipeline.hpp"
#include "pointing/model.hpp"

namespace pointing {

/// Sum squared error between two equally long position series.
double sse(std::span<const double> model_positions, std::span<const double> user_positions);

/// Largest absolute per-sample deviation between two position series.
double max_error(std::span<const double> model_positions,
                 std::span<const double> user_positions);

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Multi-start fit configuration. Start values are sampled log-uniformly
/// for k, d, r and uniformly for delta; solver bounds are the sampling
/// ranges widened tenfold on each side so that outlier parameter sets stay
/// representable.
struct FitConfig {
  int n_starts = 100;
  std::uint64_t seed = 0;

  ParamRange k_start{10.0, 5000.0};
  ParamRange d_start{0.5, 500.0};
  ParamRange r_start{1e-9, 1e-2};
  ParamRange delta_start{0.0, 0.5};

  ParamRange k_bounds{1.0, 50000.0};
  ParamRange d_bounds{0.05, 5000.0};
  ParamRange r_bounds{1e-10, 1e-1};
  ParamRange delta_bounds{0.0, 5.0};

  double premove_multiplier = kDefaultPremoveMultiplier;  ///< c for variant 3

  double step_tol = 1e-10;
  double objective_tol = 1e-12;  ///< relative objective decrease
  double gradient_tol = 1e-10;
  int max_iterations = 100;
  double fd_relative_step = 1e-6;

  void validate() const;
};

enum class Termination : std::uint8_t {
  kStepTolerance,
  kObjectiveTolerance,
  kGradientTolerance,
  kMaxIterations,
  kStartFailed,
};

const char* to_string(Termination t);

struct LsqOptions {
  double step_tol = 1e-10;
  double objective_tol = 1e-12;
  double gradient_tol = 1e-10;
  int max_iterations = 100;
  double fd_relative_step = 1e-6;
};

struct LsqResult {
  std::vector<double> x;
  double sse = 0.0;
  int iterations = 0;
  Termination termination = Termination::kMaxIterations;
  std::vector<double> sse_history;  ///< objective after each accepted step
};

/// Residual evaluation: writes the residual vector for parameters `x` and
/// returns false when the model cannot be evaluated there (treated as an
/// infinite objective).
using ResidualFn = std::function<bool(std::span<const double> x, std::vector<double>& out)>;

/// Bound-constrained nonlinear least squares: damped Gauss-Newton
/// (Levenberg-style) steps on a forward-finite-difference Jacobian with
/// projection onto the bounds. Accepted objective values decrease
/// monotonically; the result reports which tolerance terminated the run.
LsqResult lsq_solve(const ResidualFn& residuals, std::vector<double> x0,
                    std::span<const ParamRange> bounds, const LsqOptions& options);

/// Fitted parameter set; r and delta are absent for models that do not
/// carry them (2OL-Eq fits only k and d).
struct FittedParams {
  double k = 0.0;
  double d = 0.0;
  std::optional<double> r;
  std::optional<double> delta;
};

struct StartDiagnostics {
  std::vector<double> initial;
  std::vector<double> converged;
  double sse = 0.0;
  int iterations = 0;
  Termination termination = Termination::kStartFailed;
};

struct FitResult {
  FittedParams params;
  double sse = 0.0;
  double max_error = 0.0;
  std::vector<StartDiagnostics> per_start;
  std::string trial_id;
  int best_start = -1;
};

/// Fits one LQR cost variant to a trial by multi-start nonlinear least
/// squares on the raw position series. The initial state is
/// (p1_user, v1_user, T) and u0 reproduces the measured initial
/// acceleration for each candidate parameter set. Deterministic for a
/// given seed; throws fit_error if every start fails.
FitResult fit_trial(CostVariant variant, const TrialRecord& trial, const FitConfig& config);

/// Same pipeline for the equilibrium-control baseline (parameters k, d).
FitResult fit_trial_2ol_eq(const TrialRecord& trial, const FitConfig& config);

struct OutlierFilter {
  std::vector<std::size_t> retained;
  std::vector<std::size_t> dropped;
  double mean_d = 0.0;
  double sd_d = 0.0;
};

/// Single-pass 3-sigma rule on the fitted damping values: drops fits whose
/// d lies more than three standard deviations from the mean.
OutlierFilter filter_outlier_fits(const std::vector<FitResult>& fits);

/// Same rule on bare damping values (used when only the d column of a fit
/// table is at hand).
OutlierFilter filter_outliers_by_damping(std::span<const double> d_values);

/// Deterministic substream generator: every (seed, trial, start) triple
/// yields an independent, reproducible random stream.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, const std::string& trial_id, int start_index);

  double uniform01();
  double uniform(double lo, double hi);
  double log_uniform(double lo, double hi);

 private:
  std::uint64_t state_;
};

}  // namespace pointing
