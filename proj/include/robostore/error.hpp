#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace robostore {

enum class ErrorCode {
  kDuplicateTable,
  kEmptyFamilyList,
  kUnknownTable,
  kUnknownFamily,
  kSuperKeyMismatch,
  kInvalidTimestamp,
  kInvalidRange,
  kUnknownOwner,
  kUnavailable,
  kUnknownRange,
  kLtmDown,
  kTxnNotActive,
  kUnknownTxn,
  kUnknownFunction,
  kZeroSplits,
  kJobFailed,
  kUnknownJob,
  kUnknownElement,
  kUnknownProperty,
  kEmptyChain,
  kCycleDetected,
  kDanglingLink,
  kUnknownTask,
  kBrokenLink,
  kOutOfRange,
  kInvalidConfig,
  kParseError,
};

std::string_view to_string(ErrorCode code);

// Every domain failure surfaces as this exception; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace robostore
