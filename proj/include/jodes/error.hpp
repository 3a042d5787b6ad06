#pragma once

#include <stdexcept>
#include <string>

namespace jodes {

enum class ErrorCode {
  padding_overflow,
  duplicate_target,
  target_out_of_range,
  duplicate_local_key,
  duplicate_primary_key,
  bound_exceeded,
  unknown_operator,
  parse_error,
  invalid_argument,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::padding_overflow: return "PaddingOverflow";
    case ErrorCode::duplicate_target: return "DuplicateTarget";
    case ErrorCode::target_out_of_range: return "TargetOutOfRange";
    case ErrorCode::duplicate_local_key: return "DuplicateLocalKey";
    case ErrorCode::duplicate_primary_key: return "DuplicatePrimaryKey";
    case ErrorCode::bound_exceeded: return "BoundExceeded";
    case ErrorCode::unknown_operator: return "UnknownOperator";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define JODES_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

// Raised when a padded bucket bound is exceeded (the 2^-sigma failure event).
JODES_DEFINE_ERROR(PaddingOverflow, padding_overflow)
JODES_DEFINE_ERROR(DuplicateTarget, duplicate_target)
JODES_DEFINE_ERROR(TargetOutOfRange, target_out_of_range)
JODES_DEFINE_ERROR(DuplicateLocalKey, duplicate_local_key)
JODES_DEFINE_ERROR(DuplicatePrimaryKey, duplicate_primary_key)
JODES_DEFINE_ERROR(BoundExceeded, bound_exceeded)
JODES_DEFINE_ERROR(UnknownOperator, unknown_operator)
JODES_DEFINE_ERROR(ParseError, parse_error)
JODES_DEFINE_ERROR(InvalidArgument, invalid_argument)

#undef JODES_DEFINE_ERROR

}  // namespace jodes
