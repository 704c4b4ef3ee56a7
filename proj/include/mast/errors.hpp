#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mast {

/// Invalid experiment/build configuration (bad costs, fractions, unknown keys, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A symmetric system could not be factorized even after exhausting the jitter schedule.
class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, std::vector<double> jitter_tried)
      : std::runtime_error(what), jitter_tried(std::move(jitter_tried)) {}
  std::vector<double> jitter_tried;
};

/// Every restart of a hyperparameter fit failed.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Budget cannot accommodate the requested per-level minimum counts.
class AllocationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid aggregation/normalization request (e.g. non-positive baseline).
class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mast
