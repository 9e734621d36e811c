#include "smartstat/error.hpp"

namespace smartstat {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::InvalidTopology: return "InvalidTopology";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::StateOutOfRange: return "StateOutOfRange";
    case ErrorCode::CoverageError: return "CoverageError";
    case ErrorCode::MissingDrive: return "MissingDrive";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::StaleModel: return "StaleModel";
    case ErrorCode::UnknownZone: return "UnknownZone";
    case ErrorCode::GridError: return "GridError";
    case ErrorCode::ModelMismatch: return "ModelMismatch";
    case ErrorCode::ZeroActual: return "ZeroActual";
    case ErrorCode::ColdStart: return "ColdStart";
    case ErrorCode::OutOfOrderUpdate: return "OutOfOrderUpdate";
    case ErrorCode::NoAlarmWindow: return "NoAlarmWindow";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::GapTooLarge: return "GapTooLarge";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter:
    case ErrorCode::FormatError:
    case ErrorCode::EmptyInput:
    case ErrorCode::SchemaError:
    case ErrorCode::GapTooLarge:
    case ErrorCode::TooFewPoints:
    case ErrorCode::CoverageError:
    case ErrorCode::UnknownZone:
    case ErrorCode::IllConditioned:
    case ErrorCode::GridError:
      return true;
    default:
      return false;
  }
}

}  // namespace smartstat
