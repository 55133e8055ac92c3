#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cptsense {

/// Base class for every failure this library reports.  `kind()` is a stable
/// machine-readable tag (the CLI maps it into its error JSON); `what()` is the
/// human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct InvalidParams : Error {
  explicit InvalidParams(const std::string& w) : Error("invalid_params", w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config_error", w) {}
};

struct SingularLiouvillian : Error {
  explicit SingularLiouvillian(const std::string& w)
      : Error("singular_liouvillian", w) {}
};

struct StepTooCoarse : Error {
  explicit StepTooCoarse(const std::string& w) : Error("step_too_coarse", w) {}
};

struct MismatchedPaths : Error {
  explicit MismatchedPaths(const std::string& w)
      : Error("mismatched_paths", w) {}
};

struct DegeneratePosterior : Error {
  explicit DegeneratePosterior(const std::string& w)
      : Error("degenerate_posterior", w) {}
};

struct AlignmentError : Error {
  explicit AlignmentError(const std::string& w) : Error("alignment_error", w) {}
};

struct QuadratureNotConverged : Error {
  explicit QuadratureNotConverged(const std::string& w)
      : Error("quadrature_not_converged", w) {}
};

struct AssumptionViolated : Error {
  explicit AssumptionViolated(const std::string& w)
      : Error("assumption_violated", w) {}
};

struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(const std::string& w)
      : Error("not_positive_definite", w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io_error", w) {}
};

}  // namespace cptsense
