#pragma once

#include <stdexcept>
#include <string>

namespace pointing {

/// Thrown when a computation leaves the numerically trustworthy regime
/// (e.g. the feedback-gain guard in the Riccati backward pass). `step()`
/// is the 1-based time step at which the failure was detected, or -1.
class numerical_error : public std::runtime_error {
 public:
  numerical_error(const std::string& what, int step = -1)
      : std::runtime_error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// File ingestion failure. `line()` is the 1-based line number when known.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        path_(path),
        line_(line) {}
  const std::string& path() const noexcept { return path_; }
  long line() const noexcept { return line_; }

 private:
  std::string path_;
  long line_;
};

/// Every start of a multi-start fit failed to produce a finite objective.
class fit_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Surge-end detection on a series that contains no movement at all.
class no_surge_error : public std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace pointing
