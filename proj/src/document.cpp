// SPDX-License-Identifier: Apache-2.0
#include "document.hpp"

namespace netsmo {

std::vector<std::uint8_t> encode_document(const Document& doc) {
    return Document::to_cbor(doc);
}

Document decode_document(const std::vector<std::uint8_t>& bytes) {
    try {
        return Document::from_cbor(bytes);
    } catch (const Document::parse_error& e) {
        throw Error(Errc::parse_error, std::string("undecodable payload: ") + e.what());
    }
}

std::size_t encoded_size(const Document& doc) {
    return encode_document(doc).size();
}

}  // namespace netsmo
