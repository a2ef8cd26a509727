#pragma once

#include <stdexcept>
#include <string>

namespace coltrack {

enum class ErrorCategory {
  InvalidInput,
  DegenerateRegistration,
  TrainingDiverged,
  Configuration,
  Io,
  EmptyDataset,
};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidInput: return "invalid-input";
    case ErrorCategory::DegenerateRegistration: return "degenerate-registration";
    case ErrorCategory::TrainingDiverged: return "training-diverged";
    case ErrorCategory::Configuration: return "configuration";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::EmptyDataset: return "empty-dataset";
  }
  return "unknown";
}

/// All library errors carry a category so callers (and the CLI) can map them
/// to a stable, machine-parsable code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void throw_invalid_input(const std::string& msg) {
  throw Error(ErrorCategory::InvalidInput, msg);
}
[[noreturn]] inline void throw_configuration(const std::string& msg) {
  throw Error(ErrorCategory::Configuration, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorCategory::Io, msg);
}

}  // namespace coltrack
