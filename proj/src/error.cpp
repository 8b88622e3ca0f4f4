#include "anisova/error.hpp"

namespace anisova {

bool IsConfigError(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSolver:
    case ErrorCode::kDomain:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kUndefinedScore:
    case ErrorCode::kIo:
      return false;
    default:
      return true;
  }
}

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidBandwidth: return "invalid-bandwidth";
    case ErrorCode::kDuplicateTerm: return "duplicate-term";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kInconsistency: return "inconsistency";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kUnknownBackend: return "unknown-backend";
    case ErrorCode::kEmptyIndexSet: return "empty-index-set";
    case ErrorCode::kUndefinedScore: return "undefined-score";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kUnknownTerm: return "unknown-term";
    case ErrorCode::kDegenerateTerm: return "degenerate-term";
    case ErrorCode::kSolver: return "solver";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace anisova
