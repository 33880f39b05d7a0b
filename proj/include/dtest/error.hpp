#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtest {

enum class ErrorCode {
  // Validation (input files, arguments, configuration).
  FileNotFound,
  MalformedFile,
  InvalidArgument,
  SpecInvalid,
  // Computation.
  NonFiniteInput,
  EmptySet,
  SetTooSmall,
  CompressorFailure,
  EmptyTrace,
  KTooLarge,
  EmptyClassTrainingSet,
  NotMispredicted,
  DimsTooLarge,
  TooFewPoints,
  SingleCluster,
  LengthMismatch,
  ZeroVariance,
  TooFewPairs,
  ClassTooSmall,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for error codes caused by bad user input rather than by the data
/// a computation was asked to process.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dtest
