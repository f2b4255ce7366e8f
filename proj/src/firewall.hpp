// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "document.hpp"
#include "ipv4.hpp"

namespace netsmo {

enum class FwAction { Allow, Deny };
enum class FwDirection { In, Out };
enum class Protocol { Tcp, Udp, Any };

const char* fw_action_name(FwAction a);
const char* fw_direction_name(FwDirection d);
const char* protocol_name(Protocol p);
FwAction parse_fw_action(const std::string& text);
FwDirection parse_fw_direction(const std::string& text);
Protocol parse_protocol(const std::string& text);

struct FirewallRule {
    int priority = 0;
    FwDirection direction = FwDirection::In;
    Protocol protocol = Protocol::Any;
    Cidr src_cidr;
    Cidr dst_cidr;
    int port_lo = 0;
    int port_hi = 65535;
    FwAction action = FwAction::Deny;

    Document to_document() const;
    static FirewallRule from_document(const Document& doc);
};

struct FirewallPolicy {
    std::string policy_id;
    FwAction default_inbound = FwAction::Deny;
    FwAction default_outbound = FwAction::Allow;
    std::vector<FirewallRule> rules;  // ascending unique priority, enforced by validate()

    void validate() const;  // throws Error{validation_error}
    Document to_document() const;
    static FirewallPolicy from_document(const Document& doc);
};

/// Data-plane probe. src_address is filled in by the sender for the path being
/// evaluated (underlay address on underlay routes, overlay address inside a
/// tunnel).
struct SimPacket {
    std::string src_node;
    Ipv4 src_address;
    Ipv4 dst_address;
    Protocol protocol = Protocol::Tcp;
    int dst_port = 0;
    std::size_t payload_size = 0;
};

struct FwDecision {
    FwAction action = FwAction::Allow;
    std::optional<int> matched_priority;  // empty when a direction default applied
};

/// First rule in ascending priority whose direction, protocol, CIDRs, and port
/// range all match decides; otherwise the direction's default applies. Pure.
FwDecision fw_evaluate(const FirewallPolicy& policy, const SimPacket& packet,
                       FwDirection direction);

}  // namespace netsmo
