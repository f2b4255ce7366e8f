// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "document.hpp"
#include "ipv4.hpp"

namespace netsmo {

enum class VpnRole { Server, Client };

const char* vpn_role_name(VpnRole role);

struct OverlayMember {
    std::string node_id;
    VpnRole role = VpnRole::Client;
    Ipv4 overlay_address;
    std::string key_material;  // simulated credential, deterministic per member
};

struct OverlayNetwork {
    std::string network_id;
    Cidr subnet;
    std::vector<OverlayMember> members;  // input order; the server keeps its position
    std::string server_node;
    Ipv4 server_underlay;
    int server_port = 1194;

    const OverlayMember* member(const std::string& node_id) const;
    /// Per-member config handed to the node, schema stable for operator tooling.
    Document member_config(const std::string& node_id) const;
    Document to_document() const;
    static OverlayNetwork from_document(const Document& doc);
};

struct VpnMemberSpec {
    std::string node_id;
    bool tagged_server = false;
    Ipv4 underlay_address;
};

constexpr const char* kDefaultVpnSubnet = "10.8.0.0/24";
constexpr int kVpnServerPort = 1194;

/// Pure, deterministic hub-and-spoke overlay plan. The server is the unique
/// member tagged "server" (more than one tag is an error), falling back to the
/// lexicographically smallest node_id. The server takes the first host
/// address, clients take the following ones in member order.
OverlayNetwork plan_vpn(const std::string& network_id, const std::vector<VpnMemberSpec>& members,
                        std::optional<Cidr> subnet);

}  // namespace netsmo
