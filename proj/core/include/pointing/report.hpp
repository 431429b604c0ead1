#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pointing {

enum class ModelKind : std::uint8_t { kLqr1, kLqr2, kLqr3, kTwoOlEq, kMinJerk };

/// Canonical model names used on the CLI and in output files:
/// 2ol-lqr1, 2ol-lqr2, 2ol-lqr3, 2ol-eq, minjerk.
std::string to_string(ModelKind kind);

/// Parses a model name; throws std::invalid_argument listing the valid
/// names on failure.
ModelKind model_from_string(const std::string& name);

const std::vector<ModelKind>& all_models();

/// One (trial, model) evaluation.
struct ComparisonRow {
  std::string trial_id;
  std::string participant;
  double id_bits = 0.0;
  ModelKind model = ModelKind::kLqr2;
  double sse = 0.0;
  double max_error = 0.0;
  std::optional<double> k, d, r, delta;
  bool excluded = false;
  std::string reason;
};

/// Mean, standard error and sample standard deviation of one metric.
/// For a single value the SD is undefined and reported as 0 with
/// `degenerate` set.
struct MetricStats {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
  bool degenerate = false;
};

struct ModelAggregate {
  MetricStats sse;
  MetricStats max_error;
};

/// Per-model summary statistics over the non-excluded rows. Models without
/// any usable row are omitted.
std::map<ModelKind, ModelAggregate> aggregate_stats(const std::vector<ComparisonRow>& rows);

/// One fitted-parameter observation for distribution plots, grouped either
/// by participant (tasks with ID > 2 only) or by task ID.
struct ParamObservation {
  std::string model;
  std::string group_kind;  ///< "participant" | "id"
  std::string group;
  std::string param;  ///< "k" | "d" | "r" | "delta"
  double value = 0.0;
};

std::vector<ParamObservation> parameter_distributions(const std::vector<ComparisonRow>& rows);

/// comparison CSV schema:
/// trial_id,participant,task_id,model,sse,max_error,k,d,r,delta,excluded,reason
void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path);
std::vector<ComparisonRow> read_comparison_csv(const std::filesystem::path& path);

void write_param_csv(const std::vector<ParamObservation>& observations,
                     const std::filesystem::path& path);

/// Serializes aggregates as {model: {sse: {mean,se,sd,n}, max_error: {...}}}.
std::string aggregate_json(const std::map<ModelKind, ModelAggregate>& aggregates);

/// Locale-independent shortest round-trip float formatting used in every
/// CSV the tool writes.
std::string format_double(double value);

}  // namespace pointing
