#include "pointing/fitting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pointing/errors.hpp"
#include "pointing/lqr.hpp"
#include "pointing/reference_models.hpp"

namespace pointing {

double sse(std::span<const double> model_positions, std::span<const double> user_positions) {
  if (model_positions.size() != user_positions.size() || model_positions.empty())
    throw std::invalid_argument("sse: series must have equal nonzero length");
  double total = 0.0;
  for (std::size_t i = 0; i < model_positions.size(); ++i) {
    const double e = model_positions[i] - user_positions[i];
    total += e * e;
  }
  return total;
}

double max_error(std::span<const double> model_positions,
                 std::span<const double> user_positions) {
  if (model_positions.size() != user_positions.size() || model_positions.empty())
    throw std::invalid_argument("max_error: series must have equal nonzero length");
  double worst = 0.0;
  for (std::size_t i = 0; i < model_positions.size(); ++i)
    worst = std::max(worst, std::abs(model_positions[i] - user_positions[i]));
  return worst;
}

void FitConfig::validate() const {
  if (n_starts < 1) throw std::invalid_argument("FitConfig: n_starts must be >= 1");
  for (const auto* range : {&k_start, &d_start, &r_start, &k_bounds, &d_bounds, &r_bounds})
    if (!(range->lo > 0.0) || !(range->hi >= range->lo))
      throw std::invalid_argument("FitConfig: k/d/r ranges must be positive and ordered");
  if (!(delta_start.lo >= 0.0) || !(delta_bounds.lo >= 0.0))
    throw std::invalid_argument("FitConfig: delta ranges must be >= 0");
  if (max_iterations < 1) throw std::invalid_argument("FitConfig: max_iterations must be >= 1");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kStepTolerance: return "step-tolerance";
    case Termination::kObjectiveTolerance: return "objective-tolerance";
    case Termination::kGradientTolerance: return "gradient-tolerance";
    case Termination::kMaxIterations: return "max-iterations";
    case Termination::kStartFailed: return "start-failed";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_to(double value, const ParamRange& range) {
  return std::clamp(value, range.lo, range.hi);
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

LsqResult lsq_solve(const ResidualFn& residuals, std::vector<double> x0,
                    std::span<const ParamRange> bounds, const LsqOptions& options) {
  const std::size_t dim = x0.size();
  if (dim == 0 || bounds.size() != dim)
    throw std::invalid_argument("lsq_solve: bounds must match the parameter count");
  for (std::size_t i = 0; i < dim; ++i)
    if (x0[i] < bounds[i].lo || x0[i] > bounds[i].hi)
      throw std::invalid_argument("lsq_solve: start outside bounds");

  LsqResult result;
  result.x = x0;

  std::vector<double> residual;
  const auto evaluate = [&](const std::vector<double>& x, std::vector<double>& out) {
    if (!residuals(x, out)) return false;
    return all_finite(out);
  };

  if (!evaluate(x0, residual)) {
    result.sse = kInf;
    result.termination = Termination::kStartFailed;
    return result;
  }

  const auto norm2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
  };

  double current_sse = norm2(residual);
  result.sse_history.push_back(current_sse);
  const std::size_t m = residual.size();
  Eigen::MatrixXd jac(m, dim);
  std::vector<double> probe = result.x;
  std::vector<double> probe_residual;
  std::vector<double> candidate(dim);
  std::vector<double> candidate_residual;

  double lambda = 1e-3;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    // Forward-difference Jacobian; steps flip to backward at the upper bound
    // and frozen directions contribute a zero column.
    for (std::size_t j = 0; j < dim; ++j) {
      double step = options.fd_relative_step * std::abs(result.x[j]);
      if (step == 0.0) step = options.fd_relative_step;
      if (result.x[j] + step > bounds[j].hi) step = -step;
      probe = result.x;
      probe[j] = clamp_to(probe[j] + step, bounds[j]);
      const double actual = probe[j] - result.x[j];
      if (actual == 0.0 || !evaluate(probe, probe_residual)) {
        jac.col(static_cast<Eigen::Index>(j)).setZero();
        continue;
      }
      for (std::size_t i = 0; i < m; ++i)
        jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            (probe_residual[i] - residual[i]) / actual;
    }

    const Eigen::Map<const Eigen::VectorXd> res_vec(residual.data(),
                                                    static_cast<Eigen::Index>(m));
    const Eigen::VectorXd gradient = jac.transpose() * res_vec;
    if (gradient.cwiseAbs().maxCoeff() <= options.gradient_tol) {
      result.termination = Termination::kGradientTolerance;
      result.sse = current_sse;
      return result;
    }

    const Eigen::MatrixXd normal = jac.transpose() * jac;
    Eigen::VectorXd damping = normal.diagonal();
    const double diag_floor = 1e-12 * std::max(1.0, damping.maxCoeff());
    for (Eigen::Index i = 0; i < damping.size(); ++i)
      damping(i) = std::max(damping(i), diag_floor);

    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Eigen::MatrixXd system = normal;
      system.diagonal() += lambda * damping;
      const Eigen::VectorXd delta = system.ldlt().solve(-gradient);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }

      double step_norm = 0.0, x_norm = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        candidate[j] = clamp_to(result.x[j] + delta(static_cast<Eigen::Index>(j)), bounds[j]);
        step_norm += (candidate[j] - result.x[j]) * (candidate[j] - result.x[j]);
        x_norm += result.x[j] * result.x[j];
      }
      step_norm = std::sqrt(step_norm);
      x_norm = std::sqrt(x_norm);
      if (step_norm <= options.step_tol * (options.step_tol + x_norm)) {
        result.termination = Termination::kStepTolerance;
        result.sse = current_sse;
        result.iterations = iter;
        return result;
      }

      if (evaluate(candidate, candidate_residual)) {
        const double candidate_sse = norm2(candidate_residual);
        if (candidate_sse < current_sse) {
          const double improvement = current_sse - candidate_sse;
          result.x = candidate;
          residual = candidate_residual;
          current_sse = candidate_sse;
          result.sse_history.push_back(current_sse);
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          result.iterations = iter;
          if (improvement <= options.objective_tol * std::max(current_sse, 1e-300)) {
            result.termination = Termination::kObjectiveTolerance;
            result.sse = current_sse;
            return result;
          }
          break;
        }
      }
      lambda *= 10.0;
    }

    if (!accepted) {
      // Damping exhausted without an acceptable step.
      result.termination = Termination::kStepTolerance;
      result.sse = current_sse;
      result.iterations = iter;
      return result;
    }
  }

  result.termination = Termination::kMaxIterations;
  result.sse = current_sse;
  result.iterations = options.max_iterations;
  return result;
}

// --- deterministic substreams ------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

SubstreamRng::SubstreamRng(std::uint64_t seed, const std::string& trial_id, int start_index) {
  std::uint64_t mix = seed;
  (void)splitmix64(mix);
  mix ^= fnv1a(trial_id);
  (void)splitmix64(mix);
  mix ^= static_cast<std::uint64_t>(start_index) * 0x9e3779b97f4a7c15ULL;
  state_ = mix;
  // Warm up so that nearby (seed, start) pairs decorrelate.
  (void)splitmix64(state_);
}

double SubstreamRng::uniform01() {
  return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
}

double SubstreamRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double SubstreamRng::log_uniform(double lo, double hi) {
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

// --- trial fitting -----------------------------------------------------------

namespace {

struct TrialView {
  const std::vector<double>* user_positions;
  double h;
  double p1, v1, a1, target;
  int horizon;
};

TrialView view_of(const TrialRecord& trial) {
  if (trial.traj.positions.size() < 2)
    throw std::invalid_argument("fit_trial: trial needs at least 2 samples");
  if (trial.traj.velocities.empty() || trial.traj.accelerations.empty())
    throw std::invalid_argument("fit_trial: trial lacks derivative series (run the pipeline)");
  TrialView v;
  v.user_positions = &trial.traj.positions;
  v.h = trial.traj.step;
  v.p1 = trial.traj.positions.front();
  v.v1 = trial.traj.velocities.front();
  v.a1 = trial.traj.accelerations.front();
  v.target = trial.task.target_center;
  v.horizon = static_cast<int>(trial.traj.positions.size());
  return v;
}

ResidualFn lqr_residuals(CostVariant variant, const TrialView& view, double premove_c) {
  return [variant, view, premove_c](std::span<const double> x, std::vector<double>& out) {
    ModelParams params;
    params.k = x[0];
    params.d = x[1];
    params.r = x[2];
    if (variant == CostVariant::kLqr3) params.delta = x[3];
    try {
      const DynamicsMatrices dyn = build_dynamics(params, view.h);
      const AugmentedSystem sys = augment_system(dyn);
      const CostSpec cost = build_cost(variant, params, view.horizon, view.h, premove_c);
      const double u0 = initial_control(params, view.p1, view.v1, view.a1);
      const GainSchedule gains = solve_riccati(sys, cost);
      const Trajectory traj =
          simulate_lqr(gains, sys, Eigen::Vector3d(view.p1, view.v1, view.target), u0,
                       view.horizon);
      out.resize(traj.positions.size());
      for (std::size_t i = 0; i < traj.positions.size(); ++i)
        out[i] = traj.positions[i] - (*view.user_positions)[i];
      return true;
    } catch (const numerical_error&) {
      return false;
    }
  };
}

ResidualFn eq_residuals(const TrialView& view) {
  return [view](std::span<const double> x, std::vector<double>& out) {
    const Trajectory traj =
        simulate_2ol_eq(x[0], x[1], view.h, view.p1, view.v1, view.target, view.horizon);
    out.resize(traj.positions.size());
    for (std::size_t i = 0; i < traj.positions.size(); ++i)
      out[i] = traj.positions[i] - (*view.user_positions)[i];
    return true;
  };
}

std::vector<double> model_positions(const FittedParams& fitted, CostVariant variant,
                                    bool is_eq, const TrialView& view, double premove_c) {
  if (is_eq) {
    return simulate_2ol_eq(fitted.k, fitted.d, view.h, view.p1, view.v1, view.target,
                           view.horizon)
        .positions;
  }
  ModelParams params;
  params.k = fitted.k;
  params.d = fitted.d;
  params.r = fitted.r.value();
  params.delta = fitted.delta;
  const DynamicsMatrices dyn = build_dynamics(params, view.h);
  const AugmentedSystem sys = augment_system(dyn);
  const CostSpec cost = build_cost(variant, params, view.horizon, view.h, premove_c);
  const double u0 = initial_control(params, view.p1, view.v1, view.a1);
  const GainSchedule gains = solve_riccati(sys, cost);
  return simulate_lqr(gains, sys, Eigen::Vector3d(view.p1, view.v1, view.target), u0,
                      view.horizon)
      .positions;
}

FitResult run_multistart(const TrialRecord& trial, const FitConfig& config,
                         const ResidualFn& objective, bool has_r, bool has_delta,
                         CostVariant variant, bool is_eq) {
  config.validate();
  const TrialView view = view_of(trial);

  std::vector<ParamRange> bounds{config.k_bounds, config.d_bounds};
  if (has_r) bounds.push_back(config.r_bounds);
  if (has_delta) bounds.push_back(config.delta_bounds);

  LsqOptions options;
  options.step_tol = config.step_tol;
  options.objective_tol = config.objective_tol;
  options.gradient_tol = config.gradient_tol;
  options.max_iterations = config.max_iterations;
  options.fd_relative_step = config.fd_relative_step;

  FitResult result;
  result.trial_id = trial.trial_id;
  result.sse = kInf;
  result.per_start.reserve(static_cast<std::size_t>(config.n_starts));

  for (int s = 0; s < config.n_starts; ++s) {
    SubstreamRng rng(config.seed, trial.trial_id, s);
    std::vector<double> x0{rng.log_uniform(config.k_start.lo, config.k_start.hi),
                           rng.log_uniform(config.d_start.lo, config.d_start.hi)};
    if (has_r) x0.push_back(rng.log_uniform(config.r_start.lo, config.r_start.hi));
    if (has_delta) x0.push_back(rng.uniform(config.delta_start.lo, config.delta_start.hi));

    const LsqResult lsq = lsq_solve(objective, x0, bounds, options);

    StartDiagnostics diag;
    diag.initial = std::move(x0);
    diag.converged = lsq.x;
    diag.sse = lsq.sse;
    diag.iterations = lsq.iterations;
    diag.termination = lsq.termination;
    result.per_start.push_back(std::move(diag));

    if (lsq.termination != Termination::kStartFailed && lsq.sse < result.sse) {
      result.sse = lsq.sse;
      result.best_start = s;
    }
  }

  if (result.best_start < 0)
    throw fit_error("fit_trial: every start failed for trial " + trial.trial_id);

  const auto& best = result.per_start[static_cast<std::size_t>(result.best_start)];
  result.params.k = best.converged[0];
  result.params.d = best.converged[1];
  std::size_t next = 2;
  if (has_r) result.params.r = best.converged[next++];
  if (has_delta) result.params.delta = best.converged[next++];

  const std::vector<double> fitted_positions =
      model_positions(result.params, variant, is_eq, view, config.premove_multiplier);
  result.max_error = max_error(fitted_positions, *view.user_positions);
  return result;
}

}  // namespace

FitResult fit_trial(CostVariant variant, const TrialRecord& trial, const FitConfig& config) {
  const bool has_delta = variant == CostVariant::kLqr3;
  const TrialView view = view_of(trial);
  return run_multistart(trial, config,
                        lqr_residuals(variant, view, config.premove_multiplier),
                        /*has_r=*/true, has_delta, variant, /*is_eq=*/false);
}

FitResult fit_trial_2ol_eq(const TrialRecord& trial, const FitConfig& config) {
  const TrialView view = view_of(trial);
  return run_multistart(trial, config, eq_residuals(view), /*has_r=*/false,
                        /*has_delta=*/false, CostVariant::kLqr2, /*is_eq=*/true);
}

OutlierFilter filter_outliers_by_damping(std::span<const double> d_values) {
  OutlierFilter filter;
  const std::size_t n = d_values.size();
  if (n < 2) {
    for (std::size_t i = 0; i < n; ++i) filter.retained.push_back(i);
    return filter;
  }

  double mean = 0.0;
  for (double d : d_values) mean += d;
  mean /= static_cast<double>(n);

  double variance = 0.0;
  for (double d : d_values) variance += (d - mean) * (d - mean);
  variance /= static_cast<double>(n - 1);
  const double sd = std::sqrt(variance);

  filter.mean_d = mean;
  filter.sd_d = sd;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(d_values[i] - mean) > 3.0 * sd)
      filter.dropped.push_back(i);
    else
      filter.retained.push_back(i);
  }
  return filter;
}

OutlierFilter filter_outlier_fits(const std::vector<FitResult>& fits) {
  std::vector<double> damping;
  damping.reserve(fits.size());
  for (const auto& fit : fits) damping.push_back(fit.params.d);
  return filter_outliers_by_damping(damping);
}

}  // namespace pointing
