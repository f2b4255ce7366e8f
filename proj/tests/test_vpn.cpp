// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "errors.hpp"
#include "vpn.hpp"

using namespace netsmo;

namespace {

std::vector<VpnMemberSpec> reference_members() {
    return {
        VpnMemberSpec{"web", false, Ipv4::parse("54.10.0.2")},
        VpnMemberSpec{"db", true, Ipv4::parse("35.7.1.9")},
        VpnMemberSpec{"cache", false, Ipv4::parse("54.10.0.3")},
    };
}

}  // namespace

TEST_CASE("tagged member becomes the hub, clients follow in member order") {
    auto net = plan_vpn("net1", reference_members(), std::nullopt);
    CHECK(net.network_id == "net1");
    CHECK(net.subnet.str() == "10.8.0.0/24");
    CHECK(net.server_node == "db");
    CHECK(net.server_underlay.str() == "35.7.1.9");
    CHECK(net.server_port == 1194);

    REQUIRE(net.members.size() == 3);
    CHECK(net.members[0].node_id == "web");
    CHECK(net.members[0].role == VpnRole::Client);
    CHECK(net.members[0].overlay_address.str() == "10.8.0.2");
    CHECK(net.members[1].node_id == "db");
    CHECK(net.members[1].role == VpnRole::Server);
    CHECK(net.members[1].overlay_address.str() == "10.8.0.1");
    CHECK(net.members[2].node_id == "cache");
    CHECK(net.members[2].role == VpnRole::Client);
    CHECK(net.members[2].overlay_address.str() == "10.8.0.3");

    CHECK(net.members[0].key_material == "cac3d7b3d28ab029");
    CHECK(net.members[1].key_material == "5b982019d5e2a6e0");
    CHECK(net.members[2].key_material == "a7d462470c424219");
}

TEST_CASE("without a tag the lexicographically smallest node hosts the hub") {
    auto members = reference_members();
    for (auto& m : members) m.tagged_server = false;
    auto net = plan_vpn("net1", members, std::nullopt);
    CHECK(net.server_node == "cache");
    CHECK(net.member("cache")->overlay_address.str() == "10.8.0.1");
    CHECK(net.member("web")->overlay_address.str() == "10.8.0.2");
    CHECK(net.member("db")->overlay_address.str() == "10.8.0.3");
}

TEST_CASE("custom subnets re-base the addressing") {
    std::vector<VpnMemberSpec> members = {
        VpnMemberSpec{"a", false, Ipv4::parse("1.1.1.1")},
        VpnMemberSpec{"b", false, Ipv4::parse("2.2.2.2")},
    };
    auto net = plan_vpn("ring", members, Cidr::parse("192.168.77.0/28"));
    CHECK(net.server_node == "a");
    CHECK(net.members[0].overlay_address.str() == "192.168.77.1");
    CHECK(net.members[1].overlay_address.str() == "192.168.77.2");
    CHECK(net.members[0].key_material == "4e4c3472e4c50afa");
    CHECK(net.members[1].key_material == "6371aec0ce7ccd45");
}

TEST_CASE("planning rejects impossible member sets") {
    auto members = reference_members();

    try {
        plan_vpn("net1", {members[0]}, std::nullopt);
        FAIL("expected too few members");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::too_few_members);
    }

    // A /30 offers 2 usable hosts; 3 members plus the reserved slot need 4.
    try {
        plan_vpn("net1", members, Cidr::parse("10.9.0.0/30"));
        FAIL("expected a subnet size error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::subnet_too_small);
        CHECK(e.detail().at("usable_hosts") == 2);
        CHECK(e.detail().at("required") == 4);
    }

    auto two_tags = members;
    two_tags[0].tagged_server = true;
    try {
        plan_vpn("net1", two_tags, std::nullopt);
        FAIL("expected a server conflict");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::no_server_candidate);
    }

    auto dup = members;
    dup[2].node_id = "web";
    try {
        plan_vpn("net1", dup, std::nullopt);
        FAIL("expected a duplicate member error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::validation_error);
    }
}

TEST_CASE("member configs carry everything a node needs to join") {
    auto net = plan_vpn("net1", reference_members(), std::nullopt);
    auto cfg = net.member_config("web");
    CHECK(cfg.at("network_id") == "net1");
    CHECK(cfg.at("role") == "CLIENT");
    CHECK(cfg.at("overlay_address") == "10.8.0.2");
    CHECK(cfg.at("subnet") == "10.8.0.0/24");
    CHECK(cfg.at("server_endpoint").at("address") == "35.7.1.9");
    CHECK(cfg.at("server_endpoint").at("port") == 1194);
    CHECK(cfg.at("key_material") == "cac3d7b3d28ab029");

    CHECK(net.member_config("db").at("role") == "SERVER");
    CHECK(net.member("nope") == nullptr);
    CHECK_THROWS_AS(net.member_config("nope"), Error);
}

TEST_CASE("overlays round-trip through documents") {
    auto net = plan_vpn("net1", reference_members(), std::nullopt);
    auto doc = net.to_document();
    auto back = OverlayNetwork::from_document(doc);
    CHECK(back.to_document() == doc);
    CHECK(back.server_node == "db");
    CHECK(back.members.size() == 3);
    CHECK(back.member("cache")->key_material == net.member("cache")->key_material);

    CHECK_THROWS_AS(OverlayNetwork::from_document(Document{{"network_id", "x"}}), Error);
}

TEST_CASE("planning is a pure function of its inputs") {
    auto a = plan_vpn("net1", reference_members(), std::nullopt);
    auto b = plan_vpn("net1", reference_members(), std::nullopt);
    CHECK(a.to_document() == b.to_document());

    auto other = plan_vpn("net2", reference_members(), std::nullopt);
    CHECK(other.member("web")->key_material != a.member("web")->key_material);
}
