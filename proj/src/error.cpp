#include "bfl/error.hpp"

namespace bfl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownCause: return "UnknownCause";
    case ErrorCode::UnknownSymptomColumn: return "UnknownSymptomColumn";
    case ErrorCode::DuplicateDeathId: return "DuplicateDeathId";
    case ErrorCode::MalformedCell: return "MalformedCell";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidHyper: return "InvalidHyper";
    case ErrorCode::AbsentCause: return "AbsentCause";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooManySymptoms: return "TooManySymptoms";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidSummary: return "InvalidSummary";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
    case ErrorCode::DuplicateDomainId: return "DuplicateDomainId";
    case ErrorCode::EmptyRegistry: return "EmptyRegistry";
    case ErrorCode::IncompleteRegistry: return "IncompleteRegistry";
    case ErrorCode::IncompletePhi: return "IncompletePhi";
    case ErrorCode::InvalidLabels: return "InvalidLabels";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InsufficientLocalLabels: return "InsufficientLocalLabels";
    case ErrorCode::CountOverflow: return "CountOverflow";
    case ErrorCode::EmptyPredictions: return "EmptyPredictions";
    case ErrorCode::NotASimplex: return "NotASimplex";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyCauseForResample: return "EmptyCauseForResample";
    case ErrorCode::NotFullyLabeled: return "NotFullyLabeled";
    case ErrorCode::InvalidGenerator: return "InvalidGenerator";
  }
  return "UnknownError";
}

}  // namespace bfl
