#include "pointing/data_pipeline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pointing/errors.hpp"

namespace pointing {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, const std::string& path, long line) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{})
    throw parse_error(path, line, "not a number: '" + text + "'");
  return value;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::string trim_ws(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  return s.substr(start);
}

}  // namespace

RawRecording parse_recording(const std::filesystem::path& path,
                             const AdapterConfig& config) {
  std::ifstream file(path);
  if (!file) throw parse_error(path.string(), 0, "cannot open file");

  const std::string path_str = path.string();
  std::string line;
  long line_no = 0;

  if (!std::getline(file, line)) throw parse_error(path_str, 1, "empty file");
  ++line_no;
  std::vector<std::string> header = split_csv_line(trim_ws(line));
  for (auto& h : header) h = trim_ws(h);

  const int time_col = find_column(header, config.time_column);
  const int pos_col = find_column(header, config.pos_column);
  const int click_col = find_column(header, config.click_column);
  const int success_col = find_column(header, config.success_column);
  if (time_col < 0)
    throw parse_error(path_str, 1, "missing time column '" + config.time_column + "'");
  if (pos_col < 0)
    throw parse_error(path_str, 1, "missing position column '" + config.pos_column + "'");

  RawRecording rec;
  rec.source = path.stem().string();

  while (std::getline(file, line)) {
    ++line_no;
    const std::string clean = trim_ws(line);
    if (clean.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(clean);
    const auto need = static_cast<std::size_t>(std::max(time_col, pos_col));
    if (fields.size() <= need)
      throw parse_error(path_str, line_no, "too few fields");

    rec.times.push_back(parse_double(fields[static_cast<std::size_t>(time_col)], path_str, line_no));
    double pos = parse_double(fields[static_cast<std::size_t>(pos_col)], path_str, line_no);
    if (config.pos_in_px) {
      if (!(config.px_per_m > 0.0))
        throw std::invalid_argument("parse_recording: px_per_m must be > 0");
      pos /= config.px_per_m;
    }
    rec.positions.push_back(pos);

    bool click = false;
    if (click_col >= 0 && static_cast<std::size_t>(click_col) < fields.size()) {
      const std::string& raw = fields[static_cast<std::size_t>(click_col)];
      if (!trim_ws(raw).empty())
        click = parse_double(raw, path_str, line_no) != 0.0;
    }
    if (click) {
      rec.clicks.push_back(rec.positions.size() - 1);
      std::uint8_t ok = 1;
      if (success_col >= 0 && static_cast<std::size_t>(success_col) < fields.size()) {
        const std::string& raw = fields[static_cast<std::size_t>(success_col)];
        if (!trim_ws(raw).empty())
          ok = parse_double(raw, path_str, line_no) != 0.0 ? 1 : 0;
      }
      rec.successes.push_back(ok);
    }
  }

  if (rec.times.size() < 2) throw parse_error(path_str, line_no, "fewer than 2 samples");

  double step = config.step;
  if (step <= 0.0) step = rec.times[1] - rec.times[0];
  if (!(step > 0.0))
    throw parse_error(path_str, 2, "non-increasing timestamps");
  for (std::size_t i = 1; i < rec.times.size(); ++i) {
    const double dt = rec.times[i] - rec.times[i - 1];
    if (std::abs(dt - step) > config.step_tolerance)
      throw parse_error(path_str, static_cast<long>(i) + 2,
                        "non-uniform sampling: interval " + std::to_string(dt) +
                            " vs step " + std::to_string(step));
  }
  rec.step = step;
  return rec;
}

std::vector<TrialRecord> segment_trials(const RawRecording& rec) {
  std::vector<TrialRecord> trials;
  if (rec.clicks.empty()) return trials;

  double target_left = rec.target_left_m;
  double target_right = rec.target_right_m;
  if (!rec.targets_set) {
    // Derive the two target centers from click-position clusters.
    double lo = rec.positions[rec.clicks.front()];
    double hi = lo;
    for (std::size_t c : rec.clicks) {
      lo = std::min(lo, rec.positions[c]);
      hi = std::max(hi, rec.positions[c]);
    }
    const double mid = 0.5 * (lo + hi);
    double sum_left = 0.0, sum_right = 0.0;
    std::size_t n_left = 0, n_right = 0;
    for (std::size_t c : rec.clicks) {
      const double p = rec.positions[c];
      if (p < mid) {
        sum_left += p;
        ++n_left;
      } else {
        sum_right += p;
        ++n_right;
      }
    }
    target_left = n_left ? sum_left / static_cast<double>(n_left) : lo;
    target_right = n_right ? sum_right / static_cast<double>(n_right) : hi;
  }

  std::size_t begin = 0;
  for (std::size_t t = 0; t < rec.clicks.size(); ++t) {
    const std::size_t end = rec.clicks[t];  // inclusive
    TrialRecord trial;
    trial.participant = rec.participant;
    trial.index = static_cast<int>(t) + 1;
    trial.first_sample = begin;
    char id[160];
    std::snprintf(id, sizeof(id), "%s:%s:%03d", rec.participant.c_str(),
                  rec.source.c_str(), trial.index);
    trial.trial_id = id;
    trial.success = t < rec.successes.size() ? rec.successes[t] != 0 : true;

    trial.traj.step = rec.step;
    trial.traj.start_time = rec.times[begin];
    trial.traj.positions.assign(rec.positions.begin() + static_cast<std::ptrdiff_t>(begin),
                                rec.positions.begin() + static_cast<std::ptrdiff_t>(end) + 1);

    const double p_first = trial.traj.positions.front();
    const double target =
        (std::abs(target_right - p_first) >= std::abs(target_left - p_first))
            ? target_right
            : target_left;
    trial.task.target_center = target;
    trial.task.target_width = rec.width_m;
    trial.task.initial_distance = rec.distance_m;
    trial.task.index_of_difficulty = rec.id_bits;
    trial.task.direction = target >= p_first ? Direction::kRight : Direction::kLeft;

    if (trial.traj.positions.size() < 2) {
      trial.excluded = true;
      trial.exclude_reason = "too-short";
    }
    trials.push_back(std::move(trial));
    begin = end + 1;
  }
  return trials;
}

std::vector<double> savitzky_golay(std::span<const double> series, int degree,
                                   int window, int deriv_order, double h) {
  if (window % 2 == 0 || window <= degree)
    throw std::invalid_argument("savitzky_golay: window must be odd and > degree");
  if (deriv_order < 0 || deriv_order > 2)
    throw std::invalid_argument("savitzky_golay: deriv_order must be in {0,1,2}");
  if (!(h > 0.0)) throw std::invalid_argument("savitzky_golay: h must be > 0");
  const std::size_t n = series.size();
  if (n < static_cast<std::size_t>(window))
    throw std::invalid_argument("savitzky_golay: series shorter than window");

  const int half = window / 2;
  const int n_coef = degree + 1;

  // Least-squares operator mapping window samples to polynomial
  // coefficients in the integer offset variable.
  Eigen::MatrixXd vand(window, n_coef);
  for (int j = 0; j < window; ++j) {
    double power = 1.0;
    for (int q = 0; q < n_coef; ++q) {
      vand(j, q) = power;
      power *= static_cast<double>(j - half);
    }
  }
  const Eigen::MatrixXd coef_op =
      vand.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));

  const double scale = std::pow(h, -deriv_order);

  // Row vector evaluating the deriv_order-th derivative of the fitted
  // polynomial at integer offset e within the window.
  const auto eval_row = [&](double e) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(window);
    for (int q = deriv_order; q < n_coef; ++q) {
      double factor = 1.0;
      for (int m = 0; m < deriv_order; ++m) factor *= static_cast<double>(q - m);
      row += factor * std::pow(e, q - deriv_order) * coef_op.row(q);
    }
    return row;
  };

  const Eigen::RowVectorXd center_row = eval_row(0.0);

  std::vector<double> out(n);
  const Eigen::Map<const Eigen::VectorXd> data(series.data(), static_cast<Eigen::Index>(n));

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t window_start;
    double offset;
    if (i < static_cast<std::size_t>(half)) {
      window_start = 0;
      offset = static_cast<double>(i) - half;
    } else if (i + static_cast<std::size_t>(half) >= n) {
      window_start = n - static_cast<std::size_t>(window);
      offset = static_cast<double>(i - window_start) - half;
    } else {
      window_start = i - static_cast<std::size_t>(half);
      offset = 0.0;
    }
    const auto segment = data.segment(static_cast<Eigen::Index>(window_start), window);
    const double value =
        (offset == 0.0) ? center_row.dot(segment) : eval_row(offset).dot(segment);
    out[i] = scale * value;
  }
  return out;
}

TrialRecord trim_reaction(const TrialRecord& trial, double threshold_fraction) {
  if (trial.traj.accelerations.empty())
    throw std::invalid_argument("trim_reaction: acceleration series missing (run SG first)");

  const auto& acc = trial.traj.accelerations;
  const bool rightward = trial.task.direction == Direction::kRight;

  double peak = 0.0;
  for (double a : acc) peak = rightward ? std::max(peak, a) : std::min(peak, a);

  TrialRecord out = trial;
  if ((rightward && !(peak > 0.0)) || (!rightward && !(peak < 0.0))) {
    out.excluded = true;
    out.exclude_reason = "no-movement";
    return out;
  }

  const double threshold = threshold_fraction * peak;
  std::size_t first = acc.size();
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if ((rightward && acc[i] >= threshold) || (!rightward && acc[i] <= threshold)) {
      first = i;
      break;
    }
  }
  // The peak sample itself always qualifies.
  if (first == 0) return out;

  const auto cut = [&](std::vector<double>& v) {
    v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(first));
  };
  cut(out.traj.positions);
  if (!out.traj.velocities.empty()) cut(out.traj.velocities);
  if (!out.traj.accelerations.empty()) cut(out.traj.accelerations);
  if (!out.sg_positions.empty()) cut(out.sg_positions);
  out.first_sample = trial.first_sample + first;
  out.traj.start_time = trial.traj.start_time + static_cast<double>(first) * trial.traj.step;
  if (out.traj.positions.size() < 2) {
    out.excluded = true;
    out.exclude_reason = "too-short";
  }
  return out;
}

std::vector<TrialRecord> exclude_error_trials(std::vector<TrialRecord> trials) {
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!trials[i].success) {
      if (!trials[i].excluded) {
        trials[i].excluded = true;
        trials[i].exclude_reason = "error-trial";
      }
      if (i + 1 < trials.size() && !trials[i + 1].excluded) {
        trials[i + 1].excluded = true;
        trials[i + 1].exclude_reason = "follows-error-trial";
      }
    }
  }
  return trials;
}

std::vector<TrialRecord> preprocess_recording(const RawRecording& rec,
                                              const PreprocessOptions& options) {
  std::vector<TrialRecord> trials = exclude_error_trials(segment_trials(rec));

  const bool recording_long_enough =
      rec.positions.size() >= static_cast<std::size_t>(options.sg_window);
  std::vector<double> sg_pos, sg_vel, sg_acc;
  if (recording_long_enough) {
    sg_pos = savitzky_golay(rec.positions, options.sg_degree, options.sg_window, 0, rec.step);
    sg_vel = savitzky_golay(rec.positions, options.sg_degree, options.sg_window, 1, rec.step);
    sg_acc = savitzky_golay(rec.positions, options.sg_degree, options.sg_window, 2, rec.step);
  }

  for (auto& trial : trials) {
    if (trial.excluded) continue;
    if (!recording_long_enough) {
      trial.excluded = true;
      trial.exclude_reason = "too-short";
      continue;
    }
    const std::size_t begin = trial.first_sample;
    const std::size_t count = trial.traj.positions.size();
    const auto slice = [&](const std::vector<double>& series) {
      return std::vector<double>(series.begin() + static_cast<std::ptrdiff_t>(begin),
                                 series.begin() + static_cast<std::ptrdiff_t>(begin + count));
    };
    trial.sg_positions = slice(sg_pos);
    trial.traj.velocities = slice(sg_vel);
    trial.traj.accelerations = slice(sg_acc);
    if (options.trim) trial = trim_reaction(trial, options.trim_threshold);
  }
  return trials;
}

namespace {

double json_length_m(const nlohmann::json& obj, const std::string& key, double px_per_m,
                     double fallback) {
  if (obj.contains(key + "_m")) return obj[key + "_m"].get<double>();
  if (obj.contains(key + "_px")) return obj[key + "_px"].get<double>() / px_per_m;
  return fallback;
}

}  // namespace

std::vector<RawRecording> load_dataset(const std::filesystem::path& dir,
                                       const AdapterConfig& overrides) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  std::ifstream manifest_file(manifest_path);
  if (!manifest_file)
    throw parse_error(manifest_path.string(), 0, "cannot open manifest");

  nlohmann::json manifest;
  try {
    manifest_file >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(manifest_path.string(), 0, e.what());
  }

  AdapterConfig config = overrides;
  if (config.px_per_m == 1.0 && manifest.contains("px_per_m"))
    config.px_per_m = manifest["px_per_m"].get<double>();
  if (config.step == 0.0 && manifest.contains("h"))
    config.step = manifest["h"].get<double>();
  if (!config.pos_in_px && manifest.contains("pos_in_px"))
    config.pos_in_px = manifest["pos_in_px"].get<bool>();
  if (manifest.contains("columns")) {
    const auto& cols = manifest["columns"];
    if (cols.contains("time")) config.time_column = cols["time"].get<std::string>();
    if (cols.contains("pos")) config.pos_column = cols["pos"].get<std::string>();
    if (cols.contains("click")) config.click_column = cols["click"].get<std::string>();
    if (cols.contains("success")) config.success_column = cols["success"].get<std::string>();
  }

  if (!manifest.contains("recordings") || !manifest["recordings"].is_array())
    throw parse_error(manifest_path.string(), 0, "manifest lacks a 'recordings' array");

  std::vector<RawRecording> recordings;
  for (const auto& entry : manifest["recordings"]) {
    RawRecording rec = parse_recording(dir / entry["file"].get<std::string>(), config);
    rec.participant = entry.value("participant", std::string("unknown"));
    rec.distance_m = json_length_m(entry, "distance", config.px_per_m, 0.0);
    rec.width_m = json_length_m(entry, "width", config.px_per_m, 0.0);
    if (rec.width_m > 0.0)
      rec.id_bits = std::log2(rec.distance_m / rec.width_m + 1.0);
    if (entry.contains("target_left_m") || entry.contains("target_left_px")) {
      rec.target_left_m = json_length_m(entry, "target_left", config.px_per_m, 0.0);
      rec.target_right_m = json_length_m(entry, "target_right", config.px_per_m, 0.0);
      rec.targets_set = true;
    }
    recordings.push_back(std::move(rec));
  }
  return recordings;
}

}  // namespace pointing
