#ifndef ANISOVA_ERROR_HPP_
#define ANISOVA_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace anisova {

enum class ErrorCode {
  kInvalidBandwidth,
  kDuplicateTerm,
  kOutOfRange,
  kInconsistency,
  kDimensionMismatch,
  kUnknownBackend,
  kEmptyIndexSet,
  kUndefinedScore,
  kDomain,
  kInsufficientData,
  kUnknownTerm,
  kDegenerateTerm,
  kSolver,
  kInfeasible,
  kConfig,
  kIo,
};

// Configuration-type failures map to CLI exit code 2, the rest to 3.
bool IsConfigError(ErrorCode code);
const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace anisova

#endif  // ANISOVA_ERROR_HPP_
