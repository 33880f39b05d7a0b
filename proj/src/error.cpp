#include "dtest/error.hpp"

namespace dtest {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::SetTooSmall: return "SetTooSmall";
    case ErrorCode::CompressorFailure: return "CompressorFailure";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::EmptyClassTrainingSet: return "EmptyClassTrainingSet";
    case ErrorCode::NotMispredicted: return "NotMispredicted";
    case ErrorCode::DimsTooLarge: return "DimsTooLarge";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound:
    case ErrorCode::MalformedFile:
    case ErrorCode::InvalidArgument:
    case ErrorCode::SpecInvalid:
      return true;
    default:
      return false;
  }
}

}  // namespace dtest
