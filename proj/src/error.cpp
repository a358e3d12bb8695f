#include "robostore/error.hpp"

namespace robostore {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateTable: return "DuplicateTable";
    case ErrorCode::kEmptyFamilyList: return "EmptyFamilyList";
    case ErrorCode::kUnknownTable: return "UnknownTable";
    case ErrorCode::kUnknownFamily: return "UnknownFamily";
    case ErrorCode::kSuperKeyMismatch: return "SuperKeyMismatch";
    case ErrorCode::kInvalidTimestamp: return "InvalidTimestamp";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kUnknownOwner: return "UnknownOwner";
    case ErrorCode::kUnavailable: return "Unavailable";
    case ErrorCode::kUnknownRange: return "UnknownRange";
    case ErrorCode::kLtmDown: return "LtmDown";
    case ErrorCode::kTxnNotActive: return "TxnNotActive";
    case ErrorCode::kUnknownTxn: return "UnknownTxn";
    case ErrorCode::kUnknownFunction: return "UnknownFunction";
    case ErrorCode::kZeroSplits: return "ZeroSplits";
    case ErrorCode::kJobFailed: return "JobFailed";
    case ErrorCode::kUnknownJob: return "UnknownJob";
    case ErrorCode::kUnknownElement: return "UnknownElement";
    case ErrorCode::kUnknownProperty: return "UnknownProperty";
    case ErrorCode::kEmptyChain: return "EmptyChain";
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kDanglingLink: return "DanglingLink";
    case ErrorCode::kUnknownTask: return "UnknownTask";
    case ErrorCode::kBrokenLink: return "BrokenLink";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace robostore
