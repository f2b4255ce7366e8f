// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <random>

#include "errors.hpp"
#include "firewall.hpp"

using namespace netsmo;

namespace {

FirewallRule rule(int priority, FwDirection dir, Protocol proto, const char* src, const char* dst,
                  int lo, int hi, FwAction action) {
    FirewallRule r;
    r.priority = priority;
    r.direction = dir;
    r.protocol = proto;
    r.src_cidr = Cidr::parse(src);
    r.dst_cidr = Cidr::parse(dst);
    r.port_lo = lo;
    r.port_hi = hi;
    r.action = action;
    return r;
}

SimPacket packet(const char* src, const char* dst, Protocol proto, int port) {
    SimPacket p;
    p.src_address = Ipv4::parse(src);
    p.dst_address = Ipv4::parse(dst);
    p.protocol = proto;
    p.dst_port = port;
    return p;
}

}  // namespace

TEST_CASE("first matching rule decides, otherwise the direction default") {
    FirewallPolicy policy;
    policy.policy_id = "edge";
    policy.rules = {
        rule(10, FwDirection::In, Protocol::Tcp, "10.0.0.0/8", "0.0.0.0/0", 80, 80,
             FwAction::Allow),
        rule(20, FwDirection::In, Protocol::Any, "10.0.0.0/8", "0.0.0.0/0", 0, 65535,
             FwAction::Deny),
        rule(30, FwDirection::Out, Protocol::Udp, "0.0.0.0/0", "0.0.0.0/0", 53, 53,
             FwAction::Deny),
    };
    policy.validate();

    auto hit = fw_evaluate(policy, packet("10.1.2.3", "172.16.0.9", Protocol::Tcp, 80),
                           FwDirection::In);
    CHECK(hit.action == FwAction::Allow);
    CHECK(hit.matched_priority == 10);

    // Same source, different port: falls through to the broader deny at 20.
    auto blocked = fw_evaluate(policy, packet("10.1.2.3", "172.16.0.9", Protocol::Tcp, 443),
                               FwDirection::In);
    CHECK(blocked.action == FwAction::Deny);
    CHECK(blocked.matched_priority == 20);

    // Source outside every inbound rule: default inbound applies.
    auto fallback = fw_evaluate(policy, packet("192.0.2.1", "172.16.0.9", Protocol::Tcp, 80),
                                FwDirection::In);
    CHECK(fallback.action == FwAction::Deny);
    CHECK_FALSE(fallback.matched_priority.has_value());

    // Outbound traffic never consults inbound rules.
    auto out = fw_evaluate(policy, packet("10.1.2.3", "172.16.0.9", Protocol::Tcp, 80),
                           FwDirection::Out);
    CHECK(out.action == FwAction::Allow);
    CHECK_FALSE(out.matched_priority.has_value());
    auto dns = fw_evaluate(policy, packet("10.1.2.3", "8.8.8.8", Protocol::Udp, 53),
                           FwDirection::Out);
    CHECK(dns.action == FwAction::Deny);
    CHECK(dns.matched_priority == 30);
}

TEST_CASE("protocol ANY matches everything, concrete protocols only themselves") {
    FirewallPolicy policy;
    policy.policy_id = "p";
    policy.rules = {rule(1, FwDirection::In, Protocol::Any, "0.0.0.0/0", "0.0.0.0/0", 0, 65535,
                         FwAction::Allow)};
    CHECK(fw_evaluate(policy, packet("1.2.3.4", "5.6.7.8", Protocol::Tcp, 1), FwDirection::In)
              .action == FwAction::Allow);
    CHECK(fw_evaluate(policy, packet("1.2.3.4", "5.6.7.8", Protocol::Udp, 1), FwDirection::In)
              .action == FwAction::Allow);

    policy.rules = {rule(1, FwDirection::In, Protocol::Udp, "0.0.0.0/0", "0.0.0.0/0", 0, 65535,
                         FwAction::Allow)};
    CHECK(fw_evaluate(policy, packet("1.2.3.4", "5.6.7.8", Protocol::Tcp, 1), FwDirection::In)
              .matched_priority == std::nullopt);
}

TEST_CASE("port range bounds are inclusive") {
    FirewallPolicy policy;
    policy.policy_id = "p";
    policy.rules = {rule(1, FwDirection::In, Protocol::Tcp, "0.0.0.0/0", "0.0.0.0/0", 8000, 8080,
                         FwAction::Allow)};
    for (int port : {8000, 8080}) {
        CAPTURE(port);
        CHECK(fw_evaluate(policy, packet("1.2.3.4", "5.6.7.8", Protocol::Tcp, port),
                          FwDirection::In)
                  .matched_priority == 1);
    }
    for (int port : {7999, 8081}) {
        CAPTURE(port);
        CHECK_FALSE(fw_evaluate(policy, packet("1.2.3.4", "5.6.7.8", Protocol::Tcp, port),
                                FwDirection::In)
                        .matched_priority.has_value());
    }
}

TEST_CASE("validation collects every violation at once") {
    FirewallPolicy policy;
    policy.policy_id = "broken";
    policy.rules = {
        rule(20, FwDirection::In, Protocol::Tcp, "0.0.0.0/0", "0.0.0.0/0", 90, 80, FwAction::Deny),
        rule(10, FwDirection::In, Protocol::Tcp, "0.0.0.0/0", "0.0.0.0/0", 0, 70000,
             FwAction::Deny),
        rule(10, FwDirection::In, Protocol::Tcp, "0.0.0.0/0", "0.0.0.0/0", 0, 80, FwAction::Deny),
    };
    try {
        policy.validate();
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::validation_error);
        const auto& violations = e.detail().at("violations");
        // empty range on 20, out-of-range and not-sorted on 10, duplicate 10
        CHECK(violations.size() == 4);
    }

    FirewallPolicy ok;
    ok.policy_id = "empty";
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("policies round-trip through documents") {
    FirewallPolicy policy;
    policy.policy_id = "edge";
    policy.default_inbound = FwAction::Deny;
    policy.default_outbound = FwAction::Allow;
    policy.rules = {
        rule(5, FwDirection::In, Protocol::Tcp, "10.8.0.0/24", "10.8.0.0/24", 22, 22,
             FwAction::Allow),
        rule(9, FwDirection::Out, Protocol::Any, "0.0.0.0/0", "192.0.2.0/24", 0, 65535,
             FwAction::Deny),
    };
    auto doc = policy.to_document();
    auto back = FirewallPolicy::from_document(doc);
    CHECK(back.to_document() == doc);
    CHECK(back.rules.size() == 2);
    CHECK(back.rules[0].port_lo == 22);
    CHECK(back.rules[1].protocol == Protocol::Any);

    CHECK_THROWS_AS(FirewallPolicy::from_document(Document{{"policy_id", "x"}}), Error);
}

namespace {

// Reference evaluator, deliberately structured differently from the library:
// collect every matching rule and take the numerically smallest priority.
FwDecision reference_evaluate(const FirewallPolicy& policy, const SimPacket& pkt,
                              FwDirection direction) {
    std::vector<const FirewallRule*> matches;
    for (const auto& r : policy.rules) {
        bool dir_ok = r.direction == direction;
        bool proto_ok = r.protocol == Protocol::Any || r.protocol == pkt.protocol;
        bool src_ok = r.src_cidr.contains(pkt.src_address);
        bool dst_ok = r.dst_cidr.contains(pkt.dst_address);
        bool port_ok = pkt.dst_port >= r.port_lo && pkt.dst_port <= r.port_hi;
        if (dir_ok && proto_ok && src_ok && dst_ok && port_ok) matches.push_back(&r);
    }
    if (matches.empty()) {
        return FwDecision{direction == FwDirection::In ? policy.default_inbound
                                                       : policy.default_outbound,
                          std::nullopt};
    }
    auto best = *std::min_element(matches.begin(), matches.end(),
                                  [](auto* a, auto* b) { return a->priority < b->priority; });
    return FwDecision{best->action, best->priority};
}

}  // namespace

TEST_CASE("evaluation agrees with a brute-force reference on random inputs") {
    std::mt19937_64 rng(20260816);
    auto rand_int = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    auto rand_addr = [&] { return Ipv4{static_cast<std::uint32_t>(rng())}; };
    auto rand_cidr = [&] {
        int prefix = rand_int(0, 32);
        return Cidr{Ipv4{rand_addr().value & Cidr{Ipv4{}, prefix}.mask()}, prefix};
    };

    int checked = 0;
    for (int trial = 0; trial < 400; ++trial) {
        FirewallPolicy policy;
        policy.policy_id = "fuzz";
        policy.default_inbound = rng() % 2 ? FwAction::Allow : FwAction::Deny;
        policy.default_outbound = rng() % 2 ? FwAction::Allow : FwAction::Deny;
        int rule_count = rand_int(0, 8);
        int priority = 0;
        for (int i = 0; i < rule_count; ++i) {
            priority += rand_int(1, 5);
            FirewallRule r;
            r.priority = priority;
            r.direction = rng() % 2 ? FwDirection::In : FwDirection::Out;
            int proto = rand_int(0, 2);
            r.protocol = proto == 0 ? Protocol::Tcp : proto == 1 ? Protocol::Udp : Protocol::Any;
            r.src_cidr = rand_cidr();
            r.dst_cidr = rand_cidr();
            r.port_lo = rand_int(0, 65535);
            r.port_hi = rand_int(r.port_lo, 65535);
            r.action = rng() % 2 ? FwAction::Allow : FwAction::Deny;
            policy.rules.push_back(r);
        }
        policy.validate();

        for (int shot = 0; shot < 25; ++shot) {
            SimPacket pkt;
            pkt.src_address = rand_addr();
            pkt.dst_address = rand_addr();
            pkt.protocol = rng() % 2 ? Protocol::Tcp : Protocol::Udp;
            pkt.dst_port = rand_int(0, 65535);
            // Bias half the packets into rule ranges so matches actually occur.
            if (!policy.rules.empty() && shot % 2 == 0) {
                const auto& r = policy.rules[rng() % policy.rules.size()];
                pkt.src_address = r.src_cidr.base;
                pkt.dst_address = r.dst_cidr.base;
                pkt.dst_port = r.port_lo;
            }
            auto direction = rng() % 2 ? FwDirection::In : FwDirection::Out;
            auto got = fw_evaluate(policy, pkt, direction);
            auto want = reference_evaluate(policy, pkt, direction);
            REQUIRE(got.action == want.action);
            REQUIRE(got.matched_priority == want.matched_priority);
            ++checked;
        }
    }
    CHECK(checked == 10000);
}
