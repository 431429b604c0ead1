#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pointing/model.hpp"

namespace pointing {

/// Column mapping and unit handling for recording ingestion. The canonical
/// schema is `time_s,pos_m[,click,success]`; published-dataset layouts are
/// ingested by remapping column names and converting pixels to meters.
struct AdapterConfig {
  std::string time_column = "time_s";
  std::string pos_column = "pos_m";
  std::string click_column = "click";
  std::string success_column = "success";
  bool pos_in_px = false;   ///< divide positions by px_per_m on ingestion
  double px_per_m = 1.0;
  double step = 0.0;        ///< expected h [s]; 0 infers it from the first interval
  double step_tolerance = 1e-6;
};

/// One parsed recording: the full pointer time series of a participant on
/// one task, with click events marking trial ends.
struct RawRecording {
  std::string participant;
  std::string source;  ///< file stem, used in trial ids

  // Task descriptor, in meters after ingestion.
  double distance_m = 0.0;
  double width_m = 0.0;
  double id_bits = 0.0;

  double target_left_m = 0.0;
  double target_right_m = 0.0;
  bool targets_set = false;  ///< false => derive targets from click clusters

  double step = 0.0;  ///< h [s], uniform
  std::vector<double> times;
  std::vector<double> positions;  ///< [m]
  std::vector<std::size_t> clicks;      ///< 0-based sample indices of trial ends
  std::vector<std::uint8_t> successes;  ///< parallel to clicks
};

/// Parses one recording CSV. Throws parse_error (with line number) for
/// malformed rows and std::invalid_argument-style format errors for
/// non-uniform sampling.
RawRecording parse_recording(const std::filesystem::path& path,
                             const AdapterConfig& config = {});

/// One segmented trial with derived series and exclusion bookkeeping.
struct TrialRecord {
  std::string trial_id;
  std::string participant;
  int index = 0;               ///< 1-based within the recording
  std::size_t first_sample = 0;  ///< offset of the trial in its recording
  TaskSpec task;
  bool success = true;

  /// Raw positions; velocities/accelerations are filled by the
  /// Savitzky-Golay step of the pipeline and are empty before it.
  Trajectory traj;
  /// Savitzky-Golay smoothed positions (deriv order 0).
  std::vector<double> sg_positions;

  bool excluded = false;
  std::string exclude_reason;
};

/// Splits a recording at its click events: trial n spans the samples after
/// click n-1 up to and including click n. Directions alternate with the
/// reciprocal task; each trial's target is the candidate farther from its
/// first sample. Returns an empty list when the recording has no clicks.
std::vector<TrialRecord> segment_trials(const RawRecording& rec);

/// Savitzky-Golay filter: least-squares polynomial of `degree` over each
/// centered window of `window` samples, evaluated (or differentiated,
/// `deriv_order` in {0,1,2}) at the center and scaled by h^-deriv_order.
/// Edge frames evaluate the first/last window's polynomial off-center.
std::vector<double> savitzky_golay(std::span<const double> series, int degree,
                                   int window, int deriv_order, double h);

/// Drops the reaction time: removes all frames before the acceleration
/// first reaches `threshold_fraction` of its positive peak (rightward) or
/// negative peak (leftward). A trial with no peak of the required sign is
/// returned flagged excluded (no-movement). Idempotent.
TrialRecord trim_reaction(const TrialRecord& trial, double threshold_fraction = 0.005);

/// Marks every failed trial and its immediate successor excluded.
std::vector<TrialRecord> exclude_error_trials(std::vector<TrialRecord> trials);

struct PreprocessOptions {
  int sg_degree = 4;
  int sg_window = 101;
  double trim_threshold = 0.005;
  bool trim = true;  ///< variant 3 fits run on untrimmed trials
};

/// Full per-recording pipeline: segment, exclude error trials, compute
/// Savitzky-Golay derivatives, and (optionally) trim reaction times.
/// The filter runs over the continuous recording (as the published dataset
/// derivatives were computed), so trial-interior samples always see
/// centered windows; the per-trial series are then sliced out. Excluded
/// trials are kept in the list with their reason.
std::vector<TrialRecord> preprocess_recording(const RawRecording& rec,
                                              const PreprocessOptions& options = {});

/// Loads every recording listed in `dir`/manifest.json. Manifest schema:
///   { "px_per_m": f, "h": f, "pos_in_px": bool,
///     "columns": {"time": .., "pos": .., "click": .., "success": ..},
///     "recordings": [ {"file", "participant",
///                      "distance_px"|"distance_m", "width_px"|"width_m",
///                      "target_left_px"|"target_left_m", ...}, ... ] }
/// Fields given in px are converted with px_per_m. `overrides` wins over
/// manifest values where set (non-default).
std::vector<RawRecording> load_dataset(const std::filesystem::path& dir,
                                       const AdapterConfig& overrides = {});

}  // namespace pointing
