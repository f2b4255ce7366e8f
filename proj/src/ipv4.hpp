// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

namespace netsmo {

/// Dotted-quad address as a host-order integer.
struct Ipv4 {
    std::uint32_t value = 0;

    static Ipv4 parse(const std::string& text);
    std::string str() const;
    auto operator<=>(const Ipv4&) const = default;
};

/// Network in a.b.c.d/p form. The base address is masked on parse, so
/// Cidr::parse("10.8.0.5/24").base is 10.8.0.0.
struct Cidr {
    Ipv4 base;
    int prefix = 0;  // 0..32

    static Cidr parse(const std::string& text);
    std::string str() const;
    std::uint32_t mask() const;
    bool contains(Ipv4 addr) const;
    /// Usable host addresses: 2^(32-prefix) - 2, but none at /31 and /32.
    std::uint64_t usable_hosts() const;
    /// index 1 is the first host above the network address.
    Ipv4 host(std::uint64_t index) const;
    auto operator<=>(const Cidr&) const = default;
};

}  // namespace netsmo
