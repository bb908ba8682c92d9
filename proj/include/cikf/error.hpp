#pragma once

#include <stdexcept>
#include <string>

namespace cikf {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI when printing one-line errors.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Inconsistent dimensions or malformed graph.
struct StructuralError : Error {
  explicit StructuralError(const std::string& m) : Error("structural", m) {}
};

/// Invalid generator or search parameters.
struct ParameterError : Error {
  explicit ParameterError(const std::string& m) : Error("parameter", m) {}
};

/// Random generation could not meet its contract (e.g. connectivity budget).
struct GenerationError : Error {
  explicit GenerationError(const std::string& m) : Error("generation", m) {}
};

/// Model quantities unusable for the requested operation (singular R, non-PSD covariance).
struct ModelError : Error {
  explicit ModelError(const std::string& m) : Error("model", m) {}
};

/// An operation was invoked before the quantities it consumes were available.
struct SequencingError : Error {
  explicit SequencingError(const std::string& m) : Error("sequencing", m) {}
};

/// Gains, schedules, or reports do not belong to the model they are used with.
struct ConfigurationError : Error {
  explicit ConfigurationError(const std::string& m) : Error("configuration", m) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& m) : Error("numerical", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace cikf
