// SPDX-License-Identifier: Apache-2.0
#include "vpn.hpp"

#include <cstdio>

#include "errors.hpp"
#include "rng.hpp"

namespace netsmo {

const char* vpn_role_name(VpnRole role) { return role == VpnRole::Server ? "SERVER" : "CLIENT"; }

const OverlayMember* OverlayNetwork::member(const std::string& node_id) const {
    for (const auto& m : members)
        if (m.node_id == node_id) return &m;
    return nullptr;
}

Document OverlayNetwork::member_config(const std::string& node_id) const {
    const OverlayMember* m = member(node_id);
    if (!m) throw Error(Errc::unknown_node, node_id + " is not an overlay member");
    return Document{{"network_id", network_id},
                    {"role", vpn_role_name(m->role)},
                    {"overlay_address", m->overlay_address.str()},
                    {"subnet", subnet.str()},
                    {"server_endpoint", {{"address", server_underlay.str()}, {"port", server_port}}},
                    {"key_material", m->key_material}};
}

Document OverlayNetwork::to_document() const {
    Document rows = Document::array();
    for (const auto& m : members) {
        rows.push_back(Document{{"node_id", m.node_id},
                                {"role", vpn_role_name(m.role)},
                                {"overlay_address", m.overlay_address.str()},
                                {"key_material", m.key_material}});
    }
    return Document{{"network_id", network_id},
                    {"subnet", subnet.str()},
                    {"members", rows},
                    {"server_node", server_node},
                    {"server_endpoint", {{"address", server_underlay.str()}, {"port", server_port}}}};
}

OverlayNetwork OverlayNetwork::from_document(const Document& doc) {
    try {
        OverlayNetwork net;
        net.network_id = doc.at("network_id").get<std::string>();
        net.subnet = Cidr::parse(doc.at("subnet").get<std::string>());
        for (const auto& row : doc.at("members")) {
            OverlayMember m;
            m.node_id = row.at("node_id").get<std::string>();
            m.role = row.at("role").get<std::string>() == "SERVER" ? VpnRole::Server : VpnRole::Client;
            m.overlay_address = Ipv4::parse(row.at("overlay_address").get<std::string>());
            m.key_material = row.at("key_material").get<std::string>();
            net.members.push_back(std::move(m));
        }
        net.server_node = doc.at("server_node").get<std::string>();
        net.server_underlay = Ipv4::parse(doc.at("server_endpoint").at("address").get<std::string>());
        net.server_port = doc.at("server_endpoint").at("port").get<int>();
        return net;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad overlay document: ") + e.what());
    }
}

static std::string derive_key_material(const std::string& network_id, const std::string& node_id,
                                       const Ipv4& address) {
    std::uint64_t h = fnv1a64(network_id + "/" + node_id + "/" + address.str());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(splitmix64(h)));
    return std::string(buf, 16);
}

OverlayNetwork plan_vpn(const std::string& network_id, const std::vector<VpnMemberSpec>& members,
                        std::optional<Cidr> subnet) {
    if (members.size() < 2)
        throw Error(Errc::too_few_members,
                    "an overlay needs at least 2 members, got " + std::to_string(members.size()));

    Cidr net_subnet = subnet.value_or(Cidr::parse(kDefaultVpnSubnet));
    if (net_subnet.usable_hosts() < members.size() + 1)
        throw Error(Errc::subnet_too_small,
                    net_subnet.str() + " cannot address " + std::to_string(members.size()) +
                        " members",
                    Document{{"usable_hosts", net_subnet.usable_hosts()},
                             {"required", members.size() + 1}});

    const VpnMemberSpec* server = nullptr;
    std::size_t tagged = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& m = members[i];
        for (std::size_t j = 0; j < i; ++j)
            if (members[j].node_id == m.node_id)
                throw Error(Errc::validation_error, "duplicate overlay member " + m.node_id);
        if (m.tagged_server) {
            ++tagged;
            server = &m;
        }
    }
    if (tagged > 1)
        throw Error(Errc::no_server_candidate,
                    std::to_string(tagged) + " members are tagged as the server");
    if (tagged == 0) {
        for (const auto& m : members)
            if (!server || m.node_id < server->node_id) server = &m;
    }

    OverlayNetwork overlay;
    overlay.network_id = network_id;
    overlay.subnet = net_subnet;
    overlay.server_node = server->node_id;
    overlay.server_underlay = server->underlay_address;
    overlay.server_port = kVpnServerPort;

    std::uint64_t next_client_host = 2;
    for (const auto& m : members) {
        OverlayMember member;
        member.node_id = m.node_id;
        if (m.node_id == server->node_id) {
            member.role = VpnRole::Server;
            member.overlay_address = net_subnet.host(1);
        } else {
            member.role = VpnRole::Client;
            member.overlay_address = net_subnet.host(next_client_host++);
        }
        member.key_material = derive_key_material(network_id, m.node_id, member.overlay_address);
        overlay.members.push_back(std::move(member));
    }
    return overlay;
}

}  // namespace netsmo
