// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace netsmo {

/// Hierarchical key path, rendered "a/b/c". Segments match [A-Za-z0-9_.-]+,
/// at least one segment, rendered length <= 1024. Message-bus topics use the
/// same grammar.
class StateKey {
public:
    static StateKey parse(std::string_view rendered);  // throws Error{invalid_key}
    static bool valid(std::string_view rendered);

    StateKey() = default;
    explicit StateKey(std::vector<std::string> segments);  // validates

    const std::string& str() const { return rendered_; }
    const std::vector<std::string>& segments() const { return segments_; }
    bool has_prefix(const StateKey& prefix) const;

    StateKey child(std::string_view segment) const;

    auto operator<=>(const StateKey& other) const { return rendered_ <=> other.rendered_; }
    bool operator==(const StateKey& other) const { return rendered_ == other.rendered_; }

private:
    std::vector<std::string> segments_;
    std::string rendered_;
};

bool valid_key_segment(std::string_view segment);

}  // namespace netsmo
