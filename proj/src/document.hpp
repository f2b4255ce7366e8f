// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace netsmo {

constexpr std::size_t kMaxPayloadBytes = 1 << 20;  // 1 MiB, shared by store values and bus payloads

/// Canonical self-describing encoding for Document trees (CBOR). The exact
/// byte format is an internal contract: stable within a run, identity under
/// decode(encode(d)).
std::vector<std::uint8_t> encode_document(const Document& doc);
Document decode_document(const std::vector<std::uint8_t>& bytes);

std::size_t encoded_size(const Document& doc);

}  // namespace netsmo
