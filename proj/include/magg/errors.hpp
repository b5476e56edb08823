#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace magg {

// Input-side failures (bad config, bad arguments, malformed files). The CLI
// maps these to exit status 1.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Numerical failures raised while stepping or solving. The CLI maps these to
// exit status 2.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public ValidationError {
public:
  ConfigError(std::string field, const std::string& what)
      : ValidationError(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class GridMismatch : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class SnapshotError : public ValidationError {
public:
  using ValidationError::ValidationError;
};
class MagicMismatch : public SnapshotError {
public:
  using SnapshotError::SnapshotError;
};
class VersionMismatch : public SnapshotError {
public:
  using SnapshotError::SnapshotError;
};
class TruncatedPayload : public SnapshotError {
public:
  using SnapshotError::SnapshotError;
};

class MeanModeError : public SolverError {
public:
  using SolverError::SolverError;
};

class NonFiniteError : public SolverError {
public:
  using SolverError::SolverError;
};

class PositivityLoss : public SolverError {
public:
  using SolverError::SolverError;
};

class CflViolation : public SolverError {
public:
  using SolverError::SolverError;
};

class NonConvergence : public SolverError {
public:
  using SolverError::SolverError;
};

/// Raised when the phase field leaves the domain of the logarithmic potential.
/// Carries the offending value and, when known, its flat grid index.
class SeparationViolation : public SolverError {
public:
  SeparationViolation(double value, std::optional<std::size_t> index = std::nullopt);
  double value() const noexcept { return value_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

private:
  double value_;
  std::optional<std::size_t> index_;
};

}  // namespace magg
