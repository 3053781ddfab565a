// SPDX-License-Identifier: Apache-2.0
#include "ksfusion/error.hpp"

namespace ksf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::RangeExceeded: return "RangeExceeded";
    case ErrorCode::EmptyDetectionList: return "EmptyDetectionList";
    case ErrorCode::DeltaOverflow: return "DeltaOverflow";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::BadPayload: return "BadPayload";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::FrameTooLarge: return "FrameTooLarge";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::NoVutFix: return "NoVutFix";
    case ErrorCode::MissingVutState: return "MissingVutState";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace ksf
