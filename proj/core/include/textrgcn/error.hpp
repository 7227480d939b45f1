#ifndef TEXTRGCN_ERROR_HPP
#define TEXTRGCN_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace textrgcn {

enum class ErrorCode {
  InvalidArgument,
  // corpus
  AllTokensFiltered,
  EmptyClass,
  UnlabeledDocuments,
  ParseError,
  // graph
  ZeroMarginal,
  DanglingEdge,
  DuplicateEdge,
  SelfEdge,
  InvalidWeight,
  // features
  BadMagic,
  DimensionMismatch,
  TruncatedRecord,
  MalformedRecord,
  MissingKey,
  EmptyPool,
  // rgcn / train
  ShapeMismatch,
  NonFiniteInput,
  EmptyMask,
  StaleCache,
  NumericFailure,
  NodeCountMismatch,
  Io,
};

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorCategory { Usage, Data, Numeric };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// The message without the leading code name.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace textrgcn

#endif  // TEXTRGCN_ERROR_HPP
