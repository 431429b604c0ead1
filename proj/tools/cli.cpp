#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pointing/data_pipeline.hpp"
#include "pointing/errors.hpp"
#include "pointing/fitting.hpp"
#include "pointing/lqr.hpp"
#include "pointing/model.hpp"
#include "pointing/reference_models.hpp"
#include "pointing/report.hpp"

namespace fs = std::filesystem;

namespace pointing::cli {

namespace {

struct AppConfig {
  FitConfig fit;
  PreprocessOptions preprocess;
  double px_per_m = 0.0;  // 0 = unset
  int jobs = 1;
};

void read_range(const nlohmann::json& j, const char* key, ParamRange& range) {
  if (!j.contains(key)) return;
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != 2)
    throw std::invalid_argument(std::string("config: ") + key + " must be [lo, hi]");
  range.lo = arr[0].get<double>();
  range.hi = arr[1].get<double>();
}

AppConfig load_config(const std::string& path) {
  AppConfig config;
  if (path.empty()) return config;
  std::ifstream file(path);
  if (!file) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  try {
    file >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }

  auto& fit = config.fit;
  fit.n_starts = j.value("n_starts", fit.n_starts);
  fit.seed = j.value("seed", fit.seed);
  fit.premove_multiplier = j.value("premove_multiplier", fit.premove_multiplier);
  fit.max_iterations = j.value("max_iterations", fit.max_iterations);
  fit.step_tol = j.value("step_tol", fit.step_tol);
  fit.objective_tol = j.value("objective_tol", fit.objective_tol);
  fit.gradient_tol = j.value("gradient_tol", fit.gradient_tol);
  fit.fd_relative_step = j.value("fd_relative_step", fit.fd_relative_step);
  read_range(j, "k_start", fit.k_start);
  read_range(j, "d_start", fit.d_start);
  read_range(j, "r_start", fit.r_start);
  read_range(j, "delta_start", fit.delta_start);
  read_range(j, "k_bounds", fit.k_bounds);
  read_range(j, "d_bounds", fit.d_bounds);
  read_range(j, "r_bounds", fit.r_bounds);
  read_range(j, "delta_bounds", fit.delta_bounds);

  config.preprocess.sg_window = j.value("sg_window", config.preprocess.sg_window);
  config.preprocess.sg_degree = j.value("sg_degree", config.preprocess.sg_degree);
  config.preprocess.trim_threshold =
      j.value("trim_threshold", config.preprocess.trim_threshold);
  config.px_per_m = j.value("px_per_m", config.px_per_m);
  config.jobs = j.value("jobs", config.jobs);
  return config;
}

std::vector<ModelKind> parse_model_list(const std::string& list) {
  std::vector<ModelKind> requested;
  std::stringstream stream(list);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) requested.push_back(model_from_string(item));
  }
  if (requested.empty()) throw std::invalid_argument("no models requested");
  // Canonical evaluation order regardless of how the list was written.
  std::vector<ModelKind> ordered;
  for (ModelKind kind : all_models())
    if (std::find(requested.begin(), requested.end(), kind) != requested.end())
      ordered.push_back(kind);
  return ordered;
}

bool needs_untrimmed(const std::vector<ModelKind>& models) {
  return std::find(models.begin(), models.end(), ModelKind::kLqr3) != models.end();
}

std::string file_safe(std::string id) {
  for (char& c : id)
    if (c == ':' || c == '/' || c == '\\' || c == ' ') c = '_';
  return id;
}

// --- dataset loading ---------------------------------------------------------

struct PreparedTrial {
  TrialRecord trimmed;
  TrialRecord untrimmed;  // derivative series present, reaction time kept
};

struct PreparedDataset {
  std::vector<PreparedTrial> retained;
  std::vector<TrialRecord> excluded;
  std::size_t total = 0;
};

PreparedDataset prepare_dataset(const fs::path& dir, const AppConfig& config,
                                bool want_untrimmed) {
  AdapterConfig adapter;
  if (config.px_per_m > 0.0) {
    adapter.px_per_m = config.px_per_m;
    adapter.pos_in_px = true;
  }
  const std::vector<RawRecording> recordings = load_dataset(dir, adapter);

  PreparedDataset dataset;
  PreprocessOptions trimmed_opts = config.preprocess;
  trimmed_opts.trim = true;
  PreprocessOptions untrimmed_opts = config.preprocess;
  untrimmed_opts.trim = false;

  for (const auto& rec : recordings) {
    std::vector<TrialRecord> trimmed = preprocess_recording(rec, trimmed_opts);
    std::vector<TrialRecord> untrimmed;
    if (want_untrimmed) untrimmed = preprocess_recording(rec, untrimmed_opts);
    for (std::size_t i = 0; i < trimmed.size(); ++i) {
      ++dataset.total;
      if (trimmed[i].excluded) {
        dataset.excluded.push_back(trimmed[i]);
        continue;
      }
      PreparedTrial prepared;
      prepared.trimmed = std::move(trimmed[i]);
      if (want_untrimmed) prepared.untrimmed = std::move(untrimmed[i]);
      dataset.retained.push_back(std::move(prepared));
    }
  }
  return dataset;
}

// --- per-trial model evaluation ----------------------------------------------

struct ModelSeries {
  ModelKind model;
  std::vector<double> positions;  // aligned with the trimmed trial
};

struct TrialEvaluation {
  std::vector<ComparisonRow> rows;
  std::vector<ModelSeries> series;
};

ComparisonRow base_row(const TrialRecord& trial, ModelKind model) {
  ComparisonRow row;
  row.trial_id = trial.trial_id;
  row.participant = trial.participant;
  row.id_bits = trial.task.index_of_difficulty;
  row.model = model;
  return row;
}

std::vector<double> minjerk_model_positions(const TrialRecord& trial) {
  const auto& traj = trial.traj;
  const int horizon = static_cast<int>(traj.positions.size());
  const int surge_end = detect_surge_end(traj.accelerations, trial.task.direction);
  if (surge_end < 2) throw no_surge_error("degenerate surge segment");
  const double t_f = static_cast<double>(surge_end - 1) * traj.step;
  const MinJerkCoefficients coeffs = minjerk_coefficients(
      traj.positions.front(), traj.velocities.front(), traj.accelerations.front(),
      trial.sg_positions[static_cast<std::size_t>(surge_end - 1)],
      traj.velocities[static_cast<std::size_t>(surge_end - 1)],
      traj.accelerations[static_cast<std::size_t>(surge_end - 1)], t_f, traj.step);
  return minjerk_trajectory(coeffs, traj.step, horizon).positions;
}

TrialEvaluation evaluate_trial(const PreparedTrial& prepared,
                               const std::vector<ModelKind>& models,
                               const FitConfig& fit_config) {
  TrialEvaluation eval;
  const TrialRecord& trial = prepared.trimmed;

  for (ModelKind model : models) {
    ComparisonRow row = base_row(trial, model);
    std::vector<double> positions;
    try {
      switch (model) {
        case ModelKind::kLqr1:
        case ModelKind::kLqr2: {
          const CostVariant variant =
              model == ModelKind::kLqr1 ? CostVariant::kLqr1 : CostVariant::kLqr2;
          const FitResult fit = fit_trial(variant, trial, fit_config);
          row.sse = fit.sse;
          row.max_error = fit.max_error;
          row.k = fit.params.k;
          row.d = fit.params.d;
          row.r = fit.params.r;
          positions = [&] {
            ModelParams params{.k = fit.params.k, .d = fit.params.d,
                               .r = fit.params.r.value(), .delta = std::nullopt};
            const DynamicsMatrices dyn = build_dynamics(params, trial.traj.step);
            const AugmentedSystem sys = augment_system(dyn);
            const CostSpec cost =
                build_cost(variant, params, static_cast<int>(trial.traj.positions.size()),
                           trial.traj.step, fit_config.premove_multiplier);
            const double u0 =
                initial_control(params, trial.traj.positions.front(),
                                trial.traj.velocities.front(),
                                trial.traj.accelerations.front());
            return simulate_lqr(solve_riccati(sys, cost), sys,
                                Eigen::Vector3d(trial.traj.positions.front(),
                                                trial.traj.velocities.front(),
                                                trial.task.target_center),
                                u0, static_cast<int>(trial.traj.positions.size()))
                .positions;
          }();
          break;
        }
        case ModelKind::kLqr3: {
          const TrialRecord& full = prepared.untrimmed;
          const FitResult fit = fit_trial(CostVariant::kLqr3, full, fit_config);
          row.sse = fit.sse;
          row.max_error = fit.max_error;
          row.k = fit.params.k;
          row.d = fit.params.d;
          row.r = fit.params.r;
          row.delta = fit.params.delta;
          ModelParams params{.k = fit.params.k, .d = fit.params.d,
                             .r = fit.params.r.value(), .delta = fit.params.delta};
          const DynamicsMatrices dyn = build_dynamics(params, full.traj.step);
          const AugmentedSystem sys = augment_system(dyn);
          const CostSpec cost = build_cost(
              CostVariant::kLqr3, params, static_cast<int>(full.traj.positions.size()),
              full.traj.step, fit_config.premove_multiplier);
          const double u0 = initial_control(params, full.traj.positions.front(),
                                            full.traj.velocities.front(),
                                            full.traj.accelerations.front());
          std::vector<double> full_positions =
              simulate_lqr(solve_riccati(sys, cost), sys,
                           Eigen::Vector3d(full.traj.positions.front(),
                                           full.traj.velocities.front(),
                                           full.task.target_center),
                           u0, static_cast<int>(full.traj.positions.size()))
                  .positions;
          // Align to the trimmed window for the shared time-series export.
          const std::size_t offset = full_positions.size() >= trial.traj.positions.size()
                                         ? full_positions.size() - trial.traj.positions.size()
                                         : 0;
          positions.assign(full_positions.begin() + static_cast<std::ptrdiff_t>(offset),
                           full_positions.end());
          break;
        }
        case ModelKind::kTwoOlEq: {
          const FitResult fit = fit_trial_2ol_eq(trial, fit_config);
          row.sse = fit.sse;
          row.max_error = fit.max_error;
          row.k = fit.params.k;
          row.d = fit.params.d;
          positions = simulate_2ol_eq(fit.params.k, fit.params.d, trial.traj.step,
                                      trial.traj.positions.front(),
                                      trial.traj.velocities.front(),
                                      trial.task.target_center,
                                      static_cast<int>(trial.traj.positions.size()))
                          .positions;
          break;
        }
        case ModelKind::kMinJerk: {
          positions = minjerk_model_positions(trial);
          row.sse = sse(positions, trial.traj.positions);
          row.max_error = max_error(positions, trial.traj.positions);
          break;
        }
      }
    } catch (const no_surge_error& e) {
      row.excluded = true;
      row.reason = std::string("no-surge: ") + e.what();
      positions.clear();
    } catch (const fit_error& e) {
      row.excluded = true;
      row.reason = std::string("fit-failed: ") + e.what();
      positions.clear();
    }
    eval.rows.push_back(std::move(row));
    eval.series.push_back({model, std::move(positions)});
  }
  return eval;
}

std::vector<TrialEvaluation> evaluate_all(const PreparedDataset& dataset,
                                          const std::vector<ModelKind>& models,
                                          const FitConfig& fit_config, int jobs) {
  std::vector<TrialEvaluation> evaluations(dataset.retained.size());
  if (dataset.retained.empty()) return evaluations;

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(dataset.retained.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < dataset.retained.size(); ++i)
      evaluations[i] = evaluate_trial(dataset.retained[i], models, fit_config);
    return evaluations;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= dataset.retained.size()) return;
          evaluations[i] = evaluate_trial(dataset.retained[i], models, fit_config);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& thread : pool) thread.join();
  for (const auto& error : errors)
    if (error) std::rethrow_exception(error);
  return evaluations;
}

// Marks rows of LQR models whose fitted damping is a 3-sigma outlier.
void apply_outlier_filter(std::vector<TrialEvaluation>& evaluations,
                          const std::vector<ModelKind>& models) {
  for (ModelKind model : models) {
    if (model != ModelKind::kLqr1 && model != ModelKind::kLqr2 && model != ModelKind::kLqr3)
      continue;
    std::vector<double> damping;
    std::vector<ComparisonRow*> rows;
    for (auto& eval : evaluations) {
      for (auto& row : eval.rows) {
        if (row.model == model && !row.excluded && row.d) {
          damping.push_back(*row.d);
          rows.push_back(&row);
        }
      }
    }
    const OutlierFilter filter = filter_outliers_by_damping(damping);
    for (std::size_t idx : filter.dropped) {
      rows[idx]->excluded = true;
      rows[idx]->reason = "outlier-d";
    }
  }
}

std::vector<ComparisonRow> collect_rows(const std::vector<TrialEvaluation>& evaluations,
                                        const PreparedDataset& dataset) {
  std::vector<ComparisonRow> rows;
  for (const auto& eval : evaluations)
    rows.insert(rows.end(), eval.rows.begin(), eval.rows.end());
  for (const auto& trial : dataset.excluded) {
    ComparisonRow row = base_row(trial, ModelKind::kLqr2);
    row.excluded = true;
    row.reason = trial.exclude_reason;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_trajectory_csv(const Trajectory& traj, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "time_s,pos_m,vel_mps,acc_mps2,control\n";
  for (std::size_t i = 0; i < traj.positions.size(); ++i) {
    out << format_double(traj.time_at(i)) << ',' << format_double(traj.positions[i]) << ',';
    out << (i < traj.velocities.size() ? format_double(traj.velocities[i]) : std::string());
    out << ',';
    out << (i < traj.accelerations.size() ? format_double(traj.accelerations[i])
                                          : std::string());
    out << ',';
    out << (i < traj.controls.size() ? format_double(traj.controls[i]) : std::string());
    out << '\n';
  }
}

// --- subcommand bodies ---------------------------------------------------------

int cmd_ingest(const fs::path& dataset_dir, const fs::path& out_dir, const AppConfig& config,
               bool trim) {
  AppConfig local = config;
  local.preprocess.trim = trim;
  const PreparedDataset dataset = prepare_dataset(dataset_dir, local, false);
  if (dataset.retained.empty()) {
    std::cerr << "ingest: no retained trials\n";
    return kEmptyResult;
  }

  fs::create_directories(out_dir);
  nlohmann::json summary;
  summary["total_trials"] = dataset.total;
  summary["retained"] = dataset.retained.size();
  summary["excluded"] = dataset.excluded.size();
  nlohmann::json reasons = nlohmann::json::object();
  for (const auto& trial : dataset.excluded) {
    const std::string key = trial.exclude_reason.empty() ? "unknown" : trial.exclude_reason;
    reasons[key] = reasons.value(key, 0) + 1;
  }
  summary["excluded_reasons"] = reasons;

  for (const auto& prepared : dataset.retained) {
    const TrialRecord& trial = prepared.trimmed;
    const fs::path path = out_dir / (file_safe(trial.trial_id) + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "time_s,pos_m,sg_pos_m,vel_mps,acc_mps2\n";
    for (std::size_t i = 0; i < trial.traj.positions.size(); ++i) {
      out << format_double(trial.traj.time_at(i)) << ','
          << format_double(trial.traj.positions[i]) << ','
          << format_double(trial.sg_positions[i]) << ','
          << format_double(trial.traj.velocities[i]) << ','
          << format_double(trial.traj.accelerations[i]) << '\n';
    }
  }

  std::ofstream summary_out(out_dir / "ingest_summary.json");
  summary_out << summary.dump(2) << '\n';
  std::cout << "ingested " << dataset.retained.size() << " trials ("
            << dataset.excluded.size() << " excluded)\n";
  return kOk;
}

int cmd_fit(const fs::path& dataset_dir, const std::string& model_name,
            const fs::path& out_file, const AppConfig& config) {
  const std::vector<ModelKind> models = parse_model_list(model_name);
  const PreparedDataset dataset = prepare_dataset(dataset_dir, config, needs_untrimmed(models));
  if (dataset.retained.empty()) {
    std::cerr << "fit: no retained trials\n";
    return kEmptyResult;
  }
  std::vector<TrialEvaluation> evaluations =
      evaluate_all(dataset, models, config.fit, config.jobs);
  apply_outlier_filter(evaluations, models);
  const std::vector<ComparisonRow> rows = collect_rows(evaluations, dataset);
  if (!out_file.parent_path().empty()) fs::create_directories(out_file.parent_path());
  write_comparison_csv(rows, out_file);
  std::cout << "fit: wrote " << rows.size() << " rows to " << out_file.string() << '\n';
  return kOk;
}

int cmd_compare(const fs::path& dataset_dir, const std::string& model_list,
                const fs::path& out_dir, const AppConfig& config) {
  const std::vector<ModelKind> models = parse_model_list(model_list);
  const PreparedDataset dataset = prepare_dataset(dataset_dir, config, needs_untrimmed(models));
  if (dataset.retained.empty()) {
    std::cerr << "compare: no retained trials\n";
    return kEmptyResult;
  }

  std::vector<TrialEvaluation> evaluations =
      evaluate_all(dataset, models, config.fit, config.jobs);
  apply_outlier_filter(evaluations, models);
  const std::vector<ComparisonRow> rows = collect_rows(evaluations, dataset);

  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "timeseries");
  write_comparison_csv(rows, out_dir / "comparison.csv");

  const auto aggregates = aggregate_stats(rows);
  std::ofstream json_out(out_dir / "aggregate.json");
  json_out << aggregate_json(aggregates);

  const auto observations = parameter_distributions(rows);
  std::vector<ParamObservation> by_participant, by_id;
  for (const auto& obs : observations)
    (obs.group_kind == "participant" ? by_participant : by_id).push_back(obs);
  write_param_csv(by_participant, out_dir / "params_by_participant.csv");
  write_param_csv(by_id, out_dir / "params_by_id.csv");

  for (std::size_t i = 0; i < dataset.retained.size(); ++i) {
    const TrialRecord& trial = dataset.retained[i].trimmed;
    const fs::path path =
        out_dir / "timeseries" / (file_safe(trial.trial_id) + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "time_s,user_pos_m";
    for (const auto& series : evaluations[i].series)
      out << ',' << to_string(series.model) << "_pos_m";
    out << '\n';
    for (std::size_t s = 0; s < trial.traj.positions.size(); ++s) {
      out << format_double(trial.traj.time_at(s)) << ','
          << format_double(trial.traj.positions[s]);
      for (const auto& series : evaluations[i].series) {
        out << ',';
        if (s < series.positions.size()) out << format_double(series.positions[s]);
      }
      out << '\n';
    }
  }

  std::cout << "compare: " << dataset.retained.size() << " trials, "
            << models.size() << " models -> " << out_dir.string() << '\n';
  return kOk;
}

int cmd_report(const fs::path& rows_file, const fs::path& out_json,
               const fs::path& params_dir) {
  const std::vector<ComparisonRow> rows = read_comparison_csv(rows_file);
  if (rows.empty()) {
    std::cerr << "report: no rows in " << rows_file.string() << '\n';
    return kEmptyResult;
  }
  const auto aggregates = aggregate_stats(rows);
  if (aggregates.empty()) {
    std::cerr << "report: every row is excluded\n";
    return kEmptyResult;
  }
  if (!out_json.empty()) {
    if (!out_json.parent_path().empty()) fs::create_directories(out_json.parent_path());
    std::ofstream out(out_json);
    out << aggregate_json(aggregates);
  }
  if (!params_dir.empty()) {
    fs::create_directories(params_dir);
    const auto observations = parameter_distributions(rows);
    std::vector<ParamObservation> by_participant, by_id;
    for (const auto& obs : observations)
      (obs.group_kind == "participant" ? by_participant : by_id).push_back(obs);
    write_param_csv(by_participant, params_dir / "params_by_participant.csv");
    write_param_csv(by_id, params_dir / "params_by_id.csv");
  }

  std::cout << "model,metric,mean,se,sd,n\n";
  for (const auto& [model, agg] : aggregates) {
    std::cout << to_string(model) << ",sse," << format_double(agg.sse.mean) << ','
              << format_double(agg.sse.se) << ',' << format_double(agg.sse.sd) << ','
              << agg.sse.n << '\n';
    std::cout << to_string(model) << ",max_error," << format_double(agg.max_error.mean)
              << ',' << format_double(agg.max_error.se) << ','
              << format_double(agg.max_error.sd) << ',' << agg.max_error.n << '\n';
  }
  return kOk;
}

struct SimulateArgs {
  std::string model = "2ol-lqr2";
  double k = 600.0, d = 30.0, r = 1e-5;
  std::optional<double> delta;
  double target = 0.1;
  double start_pos = 0.0, start_vel = 0.0, start_acc = 0.0;
  double end_pos = 0.0, end_vel = 0.0, end_acc = 0.0;
  bool end_pos_set = false;
  double surge_time = 0.0;  // minjerk: t_f; 0 => (samples-1)*h
  int samples = 500;
  double step = 0.002;
  std::string out;
};

int cmd_simulate(const SimulateArgs& args, const AppConfig& config) {
  const ModelKind model = model_from_string(args.model);
  Trajectory traj;
  switch (model) {
    case ModelKind::kLqr1:
    case ModelKind::kLqr2:
    case ModelKind::kLqr3: {
      ModelParams params{.k = args.k, .d = args.d, .r = args.r, .delta = args.delta};
      const CostVariant variant = model == ModelKind::kLqr1   ? CostVariant::kLqr1
                                  : model == ModelKind::kLqr2 ? CostVariant::kLqr2
                                                              : CostVariant::kLqr3;
      const DynamicsMatrices dyn = build_dynamics(params, args.step);
      const AugmentedSystem sys = augment_system(dyn);
      const CostSpec cost = build_cost(variant, params, args.samples, args.step,
                                       config.fit.premove_multiplier);
      const double u0 = initial_control(params, args.start_pos, args.start_vel, args.start_acc);
      traj = simulate_lqr(solve_riccati(sys, cost), sys,
                          Eigen::Vector3d(args.start_pos, args.start_vel, args.target), u0,
                          args.samples);
      break;
    }
    case ModelKind::kTwoOlEq:
      traj = simulate_2ol_eq(args.k, args.d, args.step, args.start_pos, args.start_vel,
                             args.target, args.samples);
      break;
    case ModelKind::kMinJerk: {
      const double t_f = args.surge_time > 0.0
                             ? args.surge_time
                             : static_cast<double>(args.samples - 1) * args.step;
      const double end_pos = args.end_pos_set ? args.end_pos : args.target;
      const MinJerkCoefficients coeffs =
          minjerk_coefficients(args.start_pos, args.start_vel, args.start_acc, end_pos,
                               args.end_vel, args.end_acc, t_f, args.step);
      traj = minjerk_trajectory(coeffs, args.step, args.samples);
      break;
    }
  }

  const fs::path out_path(args.out);
  if (!out_path.parent_path().empty()) fs::create_directories(out_path.parent_path());
  write_trajectory_csv(traj, out_path);
  std::cout << "simulate: wrote " << traj.positions.size() << " samples to "
            << out_path.string() << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Optimal-feedback-control models of mouse pointing: "
               "fitting, simulation and model comparison"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
  double px_per_m = 0.0;
  app.add_option("--config", config_path, "JSON config file (flags override it)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed for fitting");
  app.add_option("--jobs", jobs, "worker threads for per-trial fan-out");
  app.add_option("--px-per-m", px_per_m, "pixel-to-meter conversion for ingestion");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "preprocess a dataset into per-trial CSVs");
  std::string ingest_dataset, ingest_out;
  bool ingest_no_trim = false;
  ingest->add_option("--dataset", ingest_dataset, "dataset directory (manifest.json)")
      ->required();
  ingest->add_option("--out", ingest_out, "output directory")->required();
  ingest->add_flag("--no-trim", ingest_no_trim, "keep reaction times");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a model to every retained trial");
  std::string fit_dataset, fit_model, fit_out;
  fit->add_option("--dataset", fit_dataset, "dataset directory")->required();
  fit->add_option("--model", fit_model, "model name (see compare --models)")->required();
  fit->add_option("--out", fit_out, "output CSV")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "simulate one model forward");
  SimulateArgs sim;
  simulate->add_option("--model", sim.model, "model name");
  simulate->add_option("--k", sim.k, "spring stiffness [1/s^2]");
  simulate->add_option("--d", sim.d, "damping [1/s]");
  simulate->add_option("--r", sim.r, "jerk weight");
  double sim_delta = -1.0;
  simulate->add_option("--delta", sim_delta, "reaction time [s] (2ol-lqr3)");
  simulate->add_option("--target", sim.target, "target position [m]");
  simulate->add_option("--start-pos", sim.start_pos, "initial position [m]");
  simulate->add_option("--start-vel", sim.start_vel, "initial velocity [m/s]");
  simulate->add_option("--start-acc", sim.start_acc, "initial acceleration [m/s^2]");
  auto* end_pos_opt = simulate->add_option("--end-pos", sim.end_pos, "minjerk end position");
  simulate->add_option("--end-vel", sim.end_vel, "minjerk end velocity");
  simulate->add_option("--end-acc", sim.end_acc, "minjerk end acceleration");
  simulate->add_option("--surge-time", sim.surge_time, "minjerk segment duration [s]");
  simulate->add_option("--samples", sim.samples, "number of samples");
  simulate->add_option("--step", sim.step, "sample step h [s]");
  simulate->add_option("--out", sim.out, "output CSV")->required();

  // compare
  auto* compare = app.add_subcommand("compare", "fit several models and report aggregates");
  std::string cmp_dataset, cmp_models = "2ol-lqr2,2ol-eq,minjerk", cmp_out;
  compare->add_option("--dataset", cmp_dataset, "dataset directory")->required();
  compare->add_option("--models", cmp_models, "comma-separated model list");
  compare->add_option("--out-dir", cmp_out, "output directory")->required();

  // report
  auto* report = app.add_subcommand("report", "aggregate an existing comparison CSV");
  std::string rep_rows, rep_json, rep_params;
  report->add_option("--rows", rep_rows, "comparison CSV")->required();
  report->add_option("--out-json", rep_json, "aggregate JSON output");
  report->add_option("--params-dir", rep_params, "parameter-distribution CSV directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  seed_set = seed_opt->count() > 0;

  try {
    AppConfig config = load_config(config_path);
    if (seed_set) config.fit.seed = seed;
    if (jobs > 0) config.jobs = jobs;
    if (px_per_m > 0.0) config.px_per_m = px_per_m;
    config.fit.validate();

    if (ingest->parsed())
      return cmd_ingest(ingest_dataset, ingest_out, config, !ingest_no_trim);
    if (fit->parsed()) return cmd_fit(fit_dataset, fit_model, fit_out, config);
    if (simulate->parsed()) {
      if (sim_delta >= 0.0) sim.delta = sim_delta;
      sim.end_pos_set = end_pos_opt->count() > 0;
      return cmd_simulate(sim, config);
    }
    if (compare->parsed()) return cmd_compare(cmp_dataset, cmp_models, cmp_out, config);
    if (report->parsed()) return cmd_report(rep_rows, rep_json, rep_params);
    return kInputError;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const parse_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace pointing::cli
