// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <vector>

#include "ksfusion/error.hpp"
#include "ksfusion/wire.hpp"
#include "support.hpp"

namespace ksf::test {

/// Errors the batch decoder may raise on arbitrary input.
inline bool is_wire_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadMagic:
    case ErrorCode::Truncated:
    case ErrorCode::UnknownKind:
    case ErrorCode::BadPayload:
    case ErrorCode::DeltaOverflow:
    case ErrorCode::TrailingBytes:
      return true;
    default:
      return false;
  }
}

/// Random bytes (a quarter of them behind a valid magic) for even `i`, a
/// valid envelope with a few flipped bits and possibly cut short for odd `i`.
inline std::vector<std::uint8_t> fuzz_input(Rng& rng, int i) {
  std::vector<std::uint8_t> bytes;
  if (i % 2 == 0) {
    bytes.resize(static_cast<std::size_t>(uniform_int(rng, 0, 200)));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    if (bytes.size() >= 4 && i % 4 == 0) std::copy(wire::kMagic.begin(), wire::kMagic.end(), bytes.begin());
    return bytes;
  }
  bytes = wire::encode_batch(random_envelope(rng));
  const int flips = uniform_int(rng, 1, 4);
  for (int f = 0; f < flips && !bytes.empty(); ++f) {
    bytes[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(bytes.size()) - 1))] ^=
        static_cast<std::uint8_t>(1u << uniform_int(rng, 0, 7));
  }
  if (uniform_int(rng, 0, 3) == 0) {
    bytes.resize(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(bytes.size()))));
  }
  return bytes;
}

}  // namespace ksf::test
