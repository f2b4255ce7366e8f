// SPDX-License-Identifier: Apache-2.0
#include "ipv4.hpp"

#include <cstdio>

#include "errors.hpp"

namespace netsmo {

Ipv4 Ipv4::parse(const std::string& text) {
    std::uint32_t parts[4];
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        if (pos >= text.size() || text[pos] < '0' || text[pos] > '9')
            throw Error(Errc::parse_error, "bad address " + text);
        std::uint32_t v = 0;
        std::size_t digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            v = v * 10 + static_cast<std::uint32_t>(text[pos] - '0');
            ++pos;
            if (++digits > 3 || v > 255) throw Error(Errc::parse_error, "bad address " + text);
        }
        parts[i] = v;
        if (i < 3) {
            if (pos >= text.size() || text[pos] != '.')
                throw Error(Errc::parse_error, "bad address " + text);
            ++pos;
        }
    }
    if (pos != text.size()) throw Error(Errc::parse_error, "bad address " + text);
    return Ipv4{(parts[0] << 24) | (parts[1] << 16) | (parts[2] << 8) | parts[3]};
}

std::string Ipv4::str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (value >> 24) & 0xff, (value >> 16) & 0xff,
                  (value >> 8) & 0xff, value & 0xff);
    return buf;
}

Cidr Cidr::parse(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos)
        throw Error(Errc::parse_error, "missing prefix length in " + text);
    Ipv4 addr = Ipv4::parse(text.substr(0, slash));
    std::string plen = text.substr(slash + 1);
    if (plen.empty() || plen.size() > 2)
        throw Error(Errc::parse_error, "bad prefix length in " + text);
    int prefix = 0;
    for (char c : plen) {
        if (c < '0' || c > '9') throw Error(Errc::parse_error, "bad prefix length in " + text);
        prefix = prefix * 10 + (c - '0');
    }
    if (prefix > 32) throw Error(Errc::parse_error, "prefix length out of range in " + text);
    Cidr net{addr, prefix};
    net.base.value &= net.mask();
    return net;
}

std::string Cidr::str() const { return base.str() + "/" + std::to_string(prefix); }

std::uint32_t Cidr::mask() const {
    if (prefix == 0) return 0;
    return ~std::uint32_t{0} << (32 - prefix);
}

bool Cidr::contains(Ipv4 addr) const { return (addr.value & mask()) == base.value; }

std::uint64_t Cidr::usable_hosts() const {
    if (prefix >= 31) return 0;
    return (std::uint64_t{1} << (32 - prefix)) - 2;
}

Ipv4 Cidr::host(std::uint64_t index) const {
    if (index == 0 || index > usable_hosts())
        throw Error(Errc::subnet_too_small,
                    "host index " + std::to_string(index) + " outside " + str());
    return Ipv4{base.value + static_cast<std::uint32_t>(index)};
}

}  // namespace netsmo
