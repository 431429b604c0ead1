#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "pointing/data_pipeline.hpp"
#include "pointing/errors.hpp"
#include "support/synthetic.hpp"

using namespace pointing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pointing_tests_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& body) {
  const fs::path path = dir / name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("parse_recording accepts the canonical schema") {
  const auto dir = temp_dir("parse_ok");
  const auto path = write_file(dir, "rec.csv",
                               "time_s,pos_m,click,success\n"
                               "0,0.01,0,\n"
                               "0.002,0.02,0,\n"
                               "0.004,0.03,1,1\n");
  const RawRecording rec = parse_recording(path);
  CHECK(rec.times.size() == 3);
  CHECK(rec.positions[2] == 0.03);
  CHECK(rec.step == doctest::Approx(0.002));
  REQUIRE(rec.clicks.size() == 1);
  CHECK(rec.clicks[0] == 2);
  CHECK(rec.successes[0] == 1);
}

TEST_CASE("parse_recording reports the offending line") {
  const auto dir = temp_dir("parse_bad");
  const auto path = write_file(dir, "rec.csv",
                               "time_s,pos_m\n"
                               "0,0.01\n"
                               "0.002,oops\n"
                               "0.004,0.03\n");
  try {
    parse_recording(path);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("parse_recording rejects non-uniform sampling") {
  const auto dir = temp_dir("parse_nonuniform");
  const auto path = write_file(dir, "rec.csv",
                               "time_s,pos_m\n"
                               "0,0.0\n"
                               "0.002,0.01\n"
                               "0.005,0.02\n");
  CHECK_THROWS_AS(parse_recording(path), parse_error);
}

TEST_CASE("parse_recording applies the pixel adapter") {
  const auto dir = temp_dir("parse_px");
  const auto path = write_file(dir, "rec.csv",
                               "t,x_px\n"
                               "0,1000\n"
                               "0.002,2000\n");
  AdapterConfig config;
  config.time_column = "t";
  config.pos_column = "x_px";
  config.pos_in_px = true;
  config.px_per_m = 4000.0;
  const RawRecording rec = parse_recording(path, config);
  CHECK(rec.positions[0] == doctest::Approx(0.25));
  CHECK(rec.positions[1] == doctest::Approx(0.5));
}

namespace {

RawRecording reciprocal_recording(int samples_per_trial, int n_trials) {
  RawRecording rec;
  rec.participant = "p07";
  rec.source = "synthetic";
  rec.step = 0.002;
  rec.distance_m = 0.1;
  rec.width_m = 0.01;
  rec.id_bits = std::log2(0.1 / 0.01 + 1.0);
  rec.target_left_m = 0.0;
  rec.target_right_m = 0.1;
  rec.targets_set = true;
  for (int t = 0; t < n_trials; ++t) {
    const double from = (t % 2 == 0) ? 0.0 : 0.1;
    const double to = (t % 2 == 0) ? 0.1 : 0.0;
    for (int i = 0; i < samples_per_trial; ++i) {
      const double tau = static_cast<double>(i) / (samples_per_trial - 1);
      rec.positions.push_back(from + (to - from) * tau);
      rec.times.push_back(static_cast<double>(rec.times.size()) * rec.step);
    }
    rec.clicks.push_back(rec.positions.size() - 1);
    rec.successes.push_back(1);
  }
  return rec;
}

}  // namespace

TEST_CASE("segment_trials splits at clicks") {
  const RawRecording rec = reciprocal_recording(500, 2);
  REQUIRE(rec.clicks.size() == 2);
  CHECK(rec.clicks[0] == 499);
  CHECK(rec.clicks[1] == 999);

  const auto trials = segment_trials(rec);
  REQUIRE(trials.size() == 2);
  CHECK(trials[0].traj.positions.size() == 500);
  CHECK(trials[1].traj.positions.size() == 500);
  CHECK(trials[0].task.direction == Direction::kRight);
  CHECK(trials[1].task.direction == Direction::kLeft);
  CHECK(trials[0].task.target_center == 0.1);
  CHECK(trials[1].task.target_center == 0.0);
  CHECK(trials[0].trial_id != trials[1].trial_id);

  SUBCASE("trial ranges tile the recording") {
    std::size_t covered = 0;
    for (const auto& trial : trials) covered += trial.traj.positions.size();
    CHECK(covered == rec.positions.size());
    // Consecutive start times line up with the partition.
    CHECK(trials[0].traj.start_time == rec.times.front());
    CHECK(trials[1].traj.start_time ==
          doctest::Approx(rec.times[rec.clicks[0] + 1]).epsilon(1e-12));
  }
}

TEST_CASE("segment_trials edge cases") {
  SUBCASE("no clicks -> no trials") {
    RawRecording rec = reciprocal_recording(100, 1);
    rec.clicks.clear();
    rec.successes.clear();
    CHECK(segment_trials(rec).empty());
  }
  SUBCASE("single click at the end spans the whole recording") {
    const RawRecording rec = reciprocal_recording(345, 1);
    const auto trials = segment_trials(rec);
    REQUIRE(trials.size() == 1);
    CHECK(trials[0].traj.positions.size() == 345);
  }
  SUBCASE("derived targets from click clusters when the manifest lacks them") {
    RawRecording rec = reciprocal_recording(200, 4);
    rec.targets_set = false;
    const auto trials = segment_trials(rec);
    CHECK(trials[0].task.target_center == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(trials[1].task.target_center == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("savitzky_golay reproduces polynomials up to the fit degree") {
  const double h = 0.002;
  std::vector<double> poly(301);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const double t = static_cast<double>(i);
    poly[i] = 0.3 - 0.01 * t + 3e-4 * t * t - 1e-6 * t * t * t + 5e-9 * t * t * t * t;
  }
  const auto smoothed = savitzky_golay(poly, 4, 101, 0, h);
  for (std::size_t i = 0; i < poly.size(); ++i)
    CHECK(smoothed[i] == doctest::Approx(poly[i]).epsilon(1e-9));
}

TEST_CASE("savitzky_golay first derivative of a ramp is exact everywhere") {
  const double h = 0.002;
  std::vector<double> ramp(200);
  for (std::size_t i = 0; i < ramp.size(); ++i)
    ramp[i] = 2.0 * (static_cast<double>(i) * h);  // slope 2 m/s
  const auto velocity = savitzky_golay(ramp, 4, 101, 1, h);
  for (double v : velocity) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("savitzky_golay interior equals a per-window normal-equations solve") {
  const double h = 0.002;
  const int window = 21, degree = 4, half = window / 2;
  std::vector<double> series(120);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = static_cast<double>(i);
    // Degree-5 polynomial: not reproduced exactly, so the least-squares fit
    // is nontrivial.
    series[i] = 1e-8 * t * t * t * t * t - 2e-5 * t * t * t + 0.01 * t;
  }
  const auto smoothed = savitzky_golay(series, degree, window, 0, h);
  const auto deriv = savitzky_golay(series, degree, window, 1, h);

  for (std::size_t center : {static_cast<std::size_t>(15), static_cast<std::size_t>(60),
                             static_cast<std::size_t>(100)}) {
    Eigen::MatrixXd vand(window, degree + 1);
    Eigen::VectorXd rhs(window);
    for (int j = 0; j < window; ++j) {
      double power = 1.0;
      for (int q = 0; q <= degree; ++q) {
        vand(j, q) = power;
        power *= static_cast<double>(j - half);
      }
      rhs(j) = series[center + static_cast<std::size_t>(j - half)];
    }
    const Eigen::MatrixXd normal = vand.transpose() * vand;
    const Eigen::VectorXd coef = normal.fullPivLu().solve(vand.transpose() * rhs);
    CHECK(smoothed[center] == doctest::Approx(coef(0)).epsilon(1e-9));
    CHECK(deriv[center] == doctest::Approx(coef(1) / h).epsilon(1e-9));
  }
}

TEST_CASE("savitzky_golay preserves constant series exactly") {
  const std::vector<double> series(150, 0.7331);
  const auto smoothed = savitzky_golay(series, 4, 101, 0, 0.002);
  double mean = 0.0;
  for (double v : smoothed) {
    CHECK(v == doctest::Approx(0.7331).epsilon(1e-12));
    mean += v;
  }
  mean /= static_cast<double>(smoothed.size());
  CHECK(mean == doctest::Approx(0.7331).epsilon(1e-12));
}

TEST_CASE("savitzky_golay argument validation") {
  std::vector<double> series(50, 1.0);
  CHECK_THROWS_AS(savitzky_golay(series, 4, 101, 0, 0.002), std::invalid_argument);
  CHECK_THROWS_AS(savitzky_golay(series, 4, 20, 0, 0.002), std::invalid_argument);
  CHECK_THROWS_AS(savitzky_golay(series, 4, 21, 3, 0.002), std::invalid_argument);
  CHECK_THROWS_AS(savitzky_golay(series, 4, 3, 0, 0.002), std::invalid_argument);
}

namespace {

TrialRecord trial_with_acceleration(const std::vector<double>& acc, Direction dir) {
  TrialRecord trial;
  trial.trial_id = "p:t:001";
  trial.task.direction = dir;
  trial.task.target_center = dir == Direction::kRight ? 0.1 : -0.1;
  trial.task.target_width = 0.01;
  trial.traj.step = 0.002;
  trial.traj.start_time = 1.0;
  trial.traj.accelerations = acc;
  trial.traj.positions.assign(acc.size(), 0.0);
  trial.traj.velocities.assign(acc.size(), 0.0);
  trial.sg_positions.assign(acc.size(), 0.0);
  for (std::size_t i = 0; i < acc.size(); ++i)
    trial.traj.positions[i] = static_cast<double>(i) * 1e-4;
  return trial;
}

}  // namespace

TEST_CASE("trim_reaction drops the idle prefix") {
  std::vector<double> acc(50, 0.0);
  for (int i = 0; i < 50; ++i) acc.push_back(0.01 + 0.02 * i);  // rises to ~1
  const TrialRecord trial = trial_with_acceleration(acc, Direction::kRight);
  const TrialRecord trimmed = trim_reaction(trial);

  CHECK_FALSE(trimmed.excluded);
  // Threshold = 0.005 * 0.99; the first rising sample (0.01) reaches it.
  CHECK(trimmed.traj.accelerations.size() == 50);
  CHECK(trimmed.traj.accelerations.front() == 0.01);
  CHECK(trimmed.traj.start_time == doctest::Approx(1.0 + 50 * 0.002).epsilon(1e-12));
  CHECK(trimmed.traj.positions.size() == trimmed.traj.accelerations.size());
  CHECK(trimmed.sg_positions.size() == trimmed.traj.accelerations.size());

  SUBCASE("trimming is idempotent") {
    const TrialRecord twice = trim_reaction(trimmed);
    CHECK(twice.traj.start_time == trimmed.traj.start_time);
    CHECK(twice.traj.positions == trimmed.traj.positions);
    CHECK(twice.traj.accelerations == trimmed.traj.accelerations);
  }
}

TEST_CASE("trim_reaction keeps trials that move from the first frame") {
  std::vector<double> acc{0.5, 0.8, 1.0, 0.6};
  const TrialRecord trial = trial_with_acceleration(acc, Direction::kRight);
  const TrialRecord trimmed = trim_reaction(trial);
  CHECK(trimmed.traj.accelerations == acc);
  CHECK(trimmed.traj.start_time == trial.traj.start_time);
}

TEST_CASE("trim_reaction flags trials that never move") {
  const TrialRecord trial =
      trial_with_acceleration(std::vector<double>(40, 0.0), Direction::kRight);
  const TrialRecord trimmed = trim_reaction(trial);
  CHECK(trimmed.excluded);
  CHECK(trimmed.exclude_reason == "no-movement");
}

TEST_CASE("trim_reaction mirrors the threshold for leftward trials") {
  std::vector<double> acc(30, 0.0);
  for (int i = 0; i < 30; ++i) acc.push_back(-0.01 - 0.03 * i);
  const TrialRecord trial = trial_with_acceleration(acc, Direction::kLeft);
  const TrialRecord trimmed = trim_reaction(trial);
  CHECK_FALSE(trimmed.excluded);
  CHECK(trimmed.traj.accelerations.front() == -0.01);
}

TEST_CASE("exclude_error_trials") {
  const auto make = [](std::initializer_list<bool> successes) {
    std::vector<TrialRecord> trials;
    int index = 0;
    for (bool ok : successes) {
      TrialRecord trial;
      trial.index = ++index;
      trial.success = ok;
      trials.push_back(trial);
    }
    return trials;
  };

  SUBCASE("a failure removes itself and its successor") {
    const auto out = exclude_error_trials(make({true, false, true, true}));
    CHECK_FALSE(out[0].excluded);
    CHECK(out[1].excluded);
    CHECK(out[2].excluded);
    CHECK(out[2].exclude_reason == "follows-error-trial");
    CHECK_FALSE(out[3].excluded);
  }
  SUBCASE("consecutive failures cascade") {
    const auto out = exclude_error_trials(make({false, false, true}));
    CHECK(out[0].excluded);
    CHECK(out[1].excluded);
    CHECK(out[2].excluded);
  }
  SUBCASE("all-success keeps everything") {
    for (const auto& trial : exclude_error_trials(make({true, true, true})))
      CHECK_FALSE(trial.excluded);
  }
  SUBCASE("a final failure excludes only itself") {
    const auto out = exclude_error_trials(make({true, false}));
    CHECK_FALSE(out[0].excluded);
    CHECK(out[1].excluded);
    CHECK(out.size() == 2);
  }
  SUBCASE("order and count are preserved") {
    const auto out = exclude_error_trials(make({true, false, true, true, false}));
    CHECK(out.size() == 5);
    for (std::size_t i = 0; i < out.size(); ++i)
      CHECK(out[i].index == static_cast<int>(i) + 1);
  }
}

TEST_CASE("preprocess_recording end to end on a generated fixture") {
  const auto dir = temp_dir("preprocess");
  testsupport::FixtureOptions options;
  options.n_trials = 2;
  options.idle_samples = 160;  // give the trimmer something to remove
  testsupport::write_fixture_dataset(dir, options);

  const auto recordings = load_dataset(dir);
  REQUIRE(recordings.size() == 1);
  const auto trials = preprocess_recording(recordings[0]);
  REQUIRE(trials.size() == 2);
  for (const auto& trial : trials) {
    CHECK_FALSE(trial.excluded);
    CHECK(trial.traj.velocities.size() == trial.traj.positions.size());
    CHECK(trial.traj.accelerations.size() == trial.traj.positions.size());
    CHECK(trial.sg_positions.size() == trial.traj.positions.size());
    // The idle prefix must be (mostly) gone.
    CHECK(trial.traj.positions.size() <
          static_cast<std::size_t>(options.idle_samples + options.move_samples));
  }
  CHECK(trials[0].task.direction == Direction::kRight);
  CHECK(trials[1].task.direction == Direction::kLeft);

  SUBCASE("a recording shorter than the SG window excludes its trials") {
    const RawRecording short_rec = reciprocal_recording(40, 2);  // 80 samples
    const auto out = preprocess_recording(short_rec);
    REQUIRE(out.size() == 2);
    for (const auto& trial : out) {
      CHECK(trial.excluded);
      CHECK(trial.exclude_reason == "too-short");
    }
  }

  SUBCASE("a rest-only trial is excluded as no-movement") {
    RawRecording rec = recordings[0];
    rec.clicks.insert(rec.clicks.begin(), 40);  // split off a 41-sample rest stub
    rec.successes.insert(rec.successes.begin(), 1);
    const auto with_stub = preprocess_recording(rec);
    REQUIRE(with_stub.size() == 3);
    CHECK(with_stub[0].excluded);
  }
}
