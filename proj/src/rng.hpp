// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace netsmo {

/// Stateless mixers for reproducible sampling. Draws are a pure function of
/// (seed, stream label, draw index), so a rehydrated run samples the same
/// values without replaying generator state.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : text) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t mix_draw(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
    return splitmix64(seed ^ fnv1a64(stream) ^ (index * 0x9e3779b97f4a7c15ull));
}

}  // namespace netsmo
