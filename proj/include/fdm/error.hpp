#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fdm {

enum class ErrorCode {
  SelfLoop,
  DuplicateEdge,
  NoSupports,
  OrphanFreeComponent,
  IndexOutOfRange,
  DimensionMismatch,
  SingularMatrix,
  ZeroLengthEdge,
  EmptyLossSpec,
  NonFiniteGradient,
  NonFiniteLoss,
  InvalidArgument,
  ParseError,
  ValidationError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Numerical failures map to CLI exit code 2; everything else is an input error.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the "<Code>: " prefix carried by what().
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace fdm
