#include "textrgcn/error.hpp"

namespace textrgcn {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AllTokensFiltered: return "AllTokensFiltered";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::UnlabeledDocuments: return "UnlabeledDocuments";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ZeroMarginal: return "ZeroMarginal";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::SelfEdge: return "SelfEdge";
    case ErrorCode::InvalidWeight: return "InvalidWeight";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::NodeCountMismatch: return "NodeCountMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return ErrorCategory::Usage;
    case ErrorCode::NonFiniteInput:
    case ErrorCode::NumericFailure:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(message) {}

}  // namespace textrgcn
