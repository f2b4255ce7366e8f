// SPDX-License-Identifier: Apache-2.0
#include "firewall.hpp"

#include <set>

#include "errors.hpp"

namespace netsmo {

const char* fw_action_name(FwAction a) { return a == FwAction::Allow ? "ALLOW" : "DENY"; }
const char* fw_direction_name(FwDirection d) { return d == FwDirection::In ? "IN" : "OUT"; }

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::Tcp: return "TCP";
        case Protocol::Udp: return "UDP";
        case Protocol::Any: return "ANY";
    }
    return "?";
}

FwAction parse_fw_action(const std::string& text) {
    if (text == "ALLOW") return FwAction::Allow;
    if (text == "DENY") return FwAction::Deny;
    throw Error(Errc::parse_error, "unknown firewall action " + text);
}

FwDirection parse_fw_direction(const std::string& text) {
    if (text == "IN") return FwDirection::In;
    if (text == "OUT") return FwDirection::Out;
    throw Error(Errc::parse_error, "unknown firewall direction " + text);
}

Protocol parse_protocol(const std::string& text) {
    if (text == "TCP") return Protocol::Tcp;
    if (text == "UDP") return Protocol::Udp;
    if (text == "ANY") return Protocol::Any;
    throw Error(Errc::parse_error, "unknown protocol " + text);
}

Document FirewallRule::to_document() const {
    return Document{{"priority", priority},
                    {"direction", fw_direction_name(direction)},
                    {"protocol", protocol_name(protocol)},
                    {"src_cidr", src_cidr.str()},
                    {"dst_cidr", dst_cidr.str()},
                    {"dst_port_range", {port_lo, port_hi}},
                    {"action", fw_action_name(action)}};
}

FirewallRule FirewallRule::from_document(const Document& doc) {
    try {
        FirewallRule rule;
        rule.priority = doc.at("priority").get<int>();
        rule.direction = parse_fw_direction(doc.at("direction").get<std::string>());
        rule.protocol = parse_protocol(doc.at("protocol").get<std::string>());
        rule.src_cidr = Cidr::parse(doc.at("src_cidr").get<std::string>());
        rule.dst_cidr = Cidr::parse(doc.at("dst_cidr").get<std::string>());
        const auto& range = doc.at("dst_port_range");
        rule.port_lo = range.at(0).get<int>();
        rule.port_hi = range.at(1).get<int>();
        rule.action = parse_fw_action(doc.at("action").get<std::string>());
        return rule;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad firewall rule: ") + e.what());
    }
}

void FirewallPolicy::validate() const {
    std::vector<std::string> violations;
    std::set<int> seen;
    int last = 0;
    bool first = true;
    for (const auto& rule : rules) {
        if (!seen.insert(rule.priority).second)
            violations.push_back("duplicate rule priority " + std::to_string(rule.priority));
        if (!first && rule.priority < last)
            violations.push_back("rules not sorted ascending at priority " +
                                 std::to_string(rule.priority));
        if (rule.port_lo > rule.port_hi)
            violations.push_back("empty port range on rule priority " +
                                 std::to_string(rule.priority));
        if (rule.port_lo < 0 || rule.port_hi > 65535)
            violations.push_back("port out of range on rule priority " +
                                 std::to_string(rule.priority));
        last = rule.priority;
        first = false;
    }
    if (!violations.empty())
        throw Error(Errc::validation_error, "invalid firewall policy " + policy_id,
                    Document{{"violations", violations}});
}

Document FirewallPolicy::to_document() const {
    Document rule_docs = Document::array();
    for (const auto& rule : rules) rule_docs.push_back(rule.to_document());
    return Document{{"policy_id", policy_id},
                    {"default_inbound", fw_action_name(default_inbound)},
                    {"default_outbound", fw_action_name(default_outbound)},
                    {"rules", rule_docs}};
}

FirewallPolicy FirewallPolicy::from_document(const Document& doc) {
    try {
        FirewallPolicy policy;
        policy.policy_id = doc.at("policy_id").get<std::string>();
        policy.default_inbound = parse_fw_action(doc.at("default_inbound").get<std::string>());
        policy.default_outbound = parse_fw_action(doc.at("default_outbound").get<std::string>());
        for (const auto& rule : doc.at("rules")) policy.rules.push_back(FirewallRule::from_document(rule));
        policy.validate();
        return policy;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad firewall policy: ") + e.what());
    }
}

FwDecision fw_evaluate(const FirewallPolicy& policy, const SimPacket& packet,
                       FwDirection direction) {
    for (const auto& rule : policy.rules) {
        if (rule.direction != direction) continue;
        if (rule.protocol != Protocol::Any && rule.protocol != packet.protocol) continue;
        if (!rule.src_cidr.contains(packet.src_address)) continue;
        if (!rule.dst_cidr.contains(packet.dst_address)) continue;
        if (packet.dst_port < rule.port_lo || packet.dst_port > rule.port_hi) continue;
        return FwDecision{rule.action, rule.priority};
    }
    FwAction fallback = direction == FwDirection::In ? policy.default_inbound
                                                     : policy.default_outbound;
    return FwDecision{fallback, std::nullopt};
}

}  // namespace netsmo
