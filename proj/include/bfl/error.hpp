#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bfl {

enum class ErrorCode {
  // data
  UnknownCause,
  UnknownSymptomColumn,
  DuplicateDeathId,
  MalformedCell,
  MalformedFile,
  // base model
  EmptyDataset,
  InvalidHyper,
  AbsentCause,
  DimensionMismatch,
  TooManySymptoms,
  // summary exchange
  IoError,
  InvalidSummary,
  ChecksumMismatch,
  FingerprintMismatch,
  SchemaVersionUnsupported,
  DuplicateDomainId,
  EmptyRegistry,
  IncompleteRegistry,
  // ensemble
  IncompletePhi,
  InvalidLabels,
  InvalidConfig,
  InsufficientLocalLabels,
  CountOverflow,
  // calibration
  EmptyPredictions,
  // evaluation
  NotASimplex,
  LengthMismatch,
  EmptyInput,
  EmptyCauseForResample,
  NotFullyLabeled,
  // simulation
  InvalidGenerator,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; the code lets callers
// (tests, the CLI exit-code mapping) branch on the failure kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace bfl
