#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smartstat {

enum class ErrorCode {
  InvalidParameter,
  InvalidTopology,
  UnstableStep,
  StateOutOfRange,
  CoverageError,
  MissingDrive,
  IllConditioned,
  StaleModel,
  UnknownZone,
  GridError,
  ModelMismatch,
  ZeroActual,
  ColdStart,
  OutOfOrderUpdate,
  NoAlarmWindow,
  FormatError,
  EmptyInput,
  ProviderUnavailable,
  SchemaError,
  GapTooLarge,
  TooFewPoints,
  CorruptRecord,
};

std::string_view to_string(ErrorCode code);

/// Errors caused by the caller's input rather than by the system: bad
/// values, malformed documents, too little or unusable data.
bool is_input_error(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace smartstat
