// SPDX-License-Identifier: Apache-2.0
#include "keys.hpp"

#include <numeric>

#include "errors.hpp"

namespace netsmo {

namespace {

constexpr std::size_t kMaxRendered = 1024;

std::string join(const std::vector<std::string>& segments) {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i) out += '/';
        out += segments[i];
    }
    return out;
}

}  // namespace

bool valid_key_segment(std::string_view segment) {
    if (segment.empty()) return false;
    for (char c : segment) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '.' || c == '-';
        if (!ok) return false;
    }
    return true;
}

StateKey::StateKey(std::vector<std::string> segments) : segments_(std::move(segments)) {
    if (segments_.empty())
        throw Error(Errc::invalid_key, "key must have at least one segment");
    for (const auto& seg : segments_) {
        if (!valid_key_segment(seg))
            throw Error(Errc::invalid_key, "invalid key segment: '" + seg + "'");
    }
    rendered_ = join(segments_);
    if (rendered_.size() > kMaxRendered)
        throw Error(Errc::invalid_key, "rendered key exceeds 1024 characters");
}

StateKey StateKey::parse(std::string_view rendered) {
    std::vector<std::string> segments;
    std::size_t start = 0;
    while (true) {
        std::size_t slash = rendered.find('/', start);
        std::string_view seg = slash == std::string_view::npos
                                   ? rendered.substr(start)
                                   : rendered.substr(start, slash - start);
        segments.emplace_back(seg);
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return StateKey(std::move(segments));
}

bool StateKey::valid(std::string_view rendered) {
    try {
        parse(rendered);
        return true;
    } catch (const Error&) {
        return false;
    }
}

bool StateKey::has_prefix(const StateKey& prefix) const {
    if (prefix.segments_.size() > segments_.size()) return false;
    for (std::size_t i = 0; i < prefix.segments_.size(); ++i) {
        if (segments_[i] != prefix.segments_[i]) return false;
    }
    return true;
}

StateKey StateKey::child(std::string_view segment) const {
    auto segments = segments_;
    segments.emplace_back(segment);
    return StateKey(std::move(segments));
}

}  // namespace netsmo
