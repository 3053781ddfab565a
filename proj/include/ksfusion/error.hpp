// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ksf {

enum class ErrorCode {
  InvalidArgument,
  RangeExceeded,
  EmptyDetectionList,
  DeltaOverflow,
  BadMagic,
  Truncated,
  UnknownKind,
  BadPayload,
  TrailingBytes,
  FrameTooLarge,
  EmptyGroup,
  NoVutFix,
  MissingVutState,
  OutOfBounds,
  NotFound,
  StorageFailure,
  TransportError,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ksf
