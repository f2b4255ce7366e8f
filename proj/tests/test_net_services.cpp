// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "firewall.hpp"
#include "load_balancer.hpp"
#include "net_services.hpp"
#include "service_framework.hpp"
#include "sim_harness.hpp"
#include "vpn.hpp"

using namespace netsmo;

namespace {

ScenarioSpec staged_scenario() {
    ScenarioSpec s;
    s.seed = 7;
    s.clouds = {CloudSpec{"c1", 16, LatencySpec{1, 1}}};
    s.agent_boot_latency = 1;
    s.default_image_latency = 1;
    s.image_start_latency = {{"vpn-server", 3}, {"vpn-client", 2}};
    return s;
}

struct Rig {
    SimClock clock;
    StateStore store{clock};
    TraceLog trace;
    MessageBus bus{clock};
    SimHarness harness;
    SimLaunchDriver driver{harness};
    ServiceManager mgr{store, bus, driver};
    NetServiceDeployer net{store, mgr, harness};

    explicit Rig(ScenarioSpec spec = staged_scenario())
        : harness(std::move(spec), clock, store, trace) {}

    void add_node(const std::string& node, const std::string& dep = "d1") {
        harness.provision_node_async("c1", node, {}, dep, false,
                                     [](std::optional<Error> err) { REQUIRE_FALSE(err); });
        clock.run_until_idle();
        harness.boot_agent_async(node, [](std::optional<Error> err) { REQUIRE_FALSE(err); });
        clock.run_until_idle();
    }

    // Runs an apply to completion and returns its settled result.
    template <typename Apply>
    std::optional<Error> settle(Apply&& apply) {
        bool fired = false;
        std::optional<Error> result;
        apply([&](std::optional<Error> err) {
            fired = true;
            result = std::move(err);
        });
        clock.run_until_idle();
        REQUIRE(fired);
        return result;
    }

    std::optional<Error> apply_vpn(const std::vector<AttachedNode>& nodes,
                                   Document params = Document::object(),
                                   const std::string& dep = "d1") {
        return settle([&](NetServiceDeployer::ApplyCallback cb) {
            net.apply_vpn(dep, nodes, params, std::move(cb));
        });
    }

    Document status_doc(ServiceType type, const std::string& dep = "d1") {
        auto entry = store.get(service_status_key(dep, type));
        REQUIRE(entry.has_value());
        return Document::parse(entry->value);
    }

    SimPacket packet(const std::string& src, const std::string& dst, int port = 80) {
        SimPacket p;
        p.src_node = src;
        p.dst_address = Ipv4::parse(dst);
        p.protocol = Protocol::Tcp;
        p.dst_port = port;
        return p;
    }
};

}  // namespace

TEST_CASE("a three node overlay deploys the concentrator first and writes status last") {
    Rig r;
    r.add_node("n1");
    r.add_node("n2");
    r.add_node("n3");
    Tick before = r.clock.now();

    auto err = r.apply_vpn({{"n1", false}, {"n2", true}, {"n3", false}});
    REQUIRE_FALSE(err);

    auto server = r.mgr.status("d1.vpn-server.n2");
    CHECK(server.state == LifecycleState::Ready);
    CHECK(server.unit_id == "u.d1.vpn-server.n2");
    REQUIRE(server.endpoints.size() == 1);
    CHECK(server.endpoints[0].name == "vpn");
    CHECK(server.endpoints[0].address == "172.16.0.2");
    CHECK(server.endpoints[0].port == 1194);
    CHECK(r.mgr.status("d1.vpn-client.n1").state == LifecycleState::Ready);
    CHECK(r.mgr.status("d1.vpn-client.n3").state == LifecycleState::Ready);

    // Clients only start once the concentrator is up: 3 ticks of server image
    // start, then 2 of client start.
    CHECK(r.clock.now() == before + 5);

    auto overlay_entry = r.store.get(overlay_key("d1"));
    REQUIRE(overlay_entry.has_value());
    auto overlay = OverlayNetwork::from_document(Document::parse(overlay_entry->value));
    CHECK(overlay.server_node == "n2");
    CHECK(overlay.subnet.str() == "10.8.0.0/24");
    REQUIRE(overlay.members.size() == 3);
    CHECK(overlay.member("n2")->overlay_address.str() == "10.8.0.1");
    CHECK(overlay.member("n1")->overlay_address.str() == "10.8.0.2");
    CHECK(overlay.member("n3")->overlay_address.str() == "10.8.0.3");
    CHECK(r.harness.overlays().count("d1") == 1);

    for (const char* n : {"n1", "n2", "n3"}) {
        auto member = r.store.get(overlay_member_key("d1", n));
        REQUIRE(member.has_value());
        auto doc = Document::parse(member->value);
        CHECK(doc.at("network_id") == "d1");
        CHECK(doc.at("server_endpoint").at("port") == 1194);
    }

    CHECK(r.status_doc(ServiceType::Vpn).at("state") == "READY");
    // The READY status is the last write of the apply.
    auto status_version = r.store.get(service_status_key("d1", ServiceType::Vpn))->version;
    auto sub = r.store.watch(StateKey::parse("deploy").child("d1"), 0);
    std::string last_key;
    while (auto ev = sub->poll()) last_key = ev->entry.key.str();
    CHECK(last_key == service_status_key("d1", ServiceType::Vpn).str());
    CHECK(status_version == 1);
}

TEST_CASE("client traffic relays through the concentrator for every ordered pair") {
    Rig r;
    for (const char* n : {"n1", "n2", "n3", "n4"}) r.add_node(n);
    REQUIRE_FALSE(r.apply_vpn({{"n1", false}, {"n2", false}, {"n3", false}, {"n4", false}}));

    // Untagged members elect the lexicographically smallest node: n1 serves.
    auto overlay_entry = r.store.get(overlay_key("d1"));
    auto overlay = OverlayNetwork::from_document(Document::parse(overlay_entry->value));
    CHECK(overlay.server_node == "n1");

    int delivered = 0;
    for (const auto& src : overlay.members) {
        for (const auto& dst : overlay.members) {
            if (src.node_id == dst.node_id) continue;
            auto res = r.harness.send(r.packet(src.node_id, dst.overlay_address.str()));
            CHECK(res.delivered);
            if (res.delivered) ++delivered;
            bool src_is_hub = src.node_id == overlay.server_node;
            bool dst_is_hub = dst.node_id == overlay.server_node;
            if (!src_is_hub && !dst_is_hub) {
                REQUIRE(res.hops.size() == 3);
                CHECK(res.hops[1] == overlay.server_node);
            } else {
                CHECK(res.hops.size() == 2);
            }
        }
    }
    CHECK(delivered == 12);
}

TEST_CASE("overlays of distinct deployments are mutually unreachable") {
    Rig r;
    r.add_node("a1", "d1");
    r.add_node("a2", "d1");
    r.add_node("b1", "d2");
    r.add_node("b2", "d2");
    REQUIRE_FALSE(r.apply_vpn({{"a1", true}, {"a2", false}}));
    REQUIRE_FALSE(r.apply_vpn({{"b1", true}, {"b2", false}},
                              Document{{"subnet", "10.9.0.0/24"}}, "d2"));

    auto d1 = OverlayNetwork::from_document(Document::parse(r.store.get(overlay_key("d1"))->value));
    auto d2 = OverlayNetwork::from_document(Document::parse(r.store.get(overlay_key("d2"))->value));
    CHECK(d2.member("b1")->overlay_address.str() == "10.9.0.1");

    for (const auto& src : d1.members) {
        for (const auto& dst : d2.members) {
            auto res = r.harness.send(r.packet(src.node_id, dst.overlay_address.str()));
            CHECK_FALSE(res.delivered);
            CHECK(res.reason == "not-a-member");
        }
    }
    for (const auto& src : d2.members) {
        for (const auto& dst : d1.members) {
            CHECK_FALSE(r.harness.send(r.packet(src.node_id, dst.overlay_address.str())).delivered);
        }
    }
    for (const auto& net : {d1, d2}) {
        for (const auto& src : net.members) {
            for (const auto& dst : net.members) {
                if (src.node_id == dst.node_id) continue;
                CHECK(r.harness.send(r.packet(src.node_id, dst.overlay_address.str())).delivered);
            }
        }
    }
}

TEST_CASE("a failing client rolls live members back and fails the status") {
    Rig r;
    r.add_node("n1");
    r.add_node("n2");
    r.add_node("n3");
    r.harness.inject_fault("node:n3", "fail-always");

    auto err = r.apply_vpn({{"n1", false}, {"n2", true}, {"n3", false}});
    REQUIRE(err.has_value());
    CHECK(err->code() == Errc::launch_fault);
    CHECK(err->detail().at("nodes") == Document::array({"n3"}));

    CHECK(r.mgr.status("d1.vpn-server.n2").state == LifecycleState::Stopped);
    CHECK(r.mgr.status("d1.vpn-client.n1").state == LifecycleState::Stopped);
    CHECK(r.mgr.status("d1.vpn-client.n3").state == LifecycleState::Failed);

    auto status = r.status_doc(ServiceType::Vpn);
    CHECK(status.at("state") == "FAILED");
    CHECK(status.at("error").at("code") == "LAUNCH_FAULT");
    CHECK(r.harness.overlays().count("d1") == 0);
    CHECK_FALSE(r.store.get(overlay_key("d1")).has_value());
}

TEST_CASE("a failing concentrator fails the apply before any client launches") {
    Rig r;
    r.add_node("n1");
    r.add_node("n2");
    r.harness.inject_fault("node:n2", "fail-always");

    auto err = r.apply_vpn({{"n1", false}, {"n2", true}});
    REQUIRE(err.has_value());
    CHECK(r.status_doc(ServiceType::Vpn).at("state") == "FAILED");

    auto instances = r.mgr.instances("d1");
    REQUIRE(instances.size() == 1);
    CHECK(instances[0].instance_id == "d1.vpn-server.n2");
    CHECK(instances[0].state == LifecycleState::Failed);
}

TEST_CASE("re-applying the same overlay is idempotent") {
    Rig r;
    r.add_node("n1");
    r.add_node("n2");
    REQUIRE_FALSE(r.apply_vpn({{"n1", true}, {"n2", false}}));

    auto unit_starts = [&] {
        int count = 0;
        for (const auto& ev : r.trace.events())
            if (ev.kind == "unit-start") ++count;
        return count;
    };
    int before = unit_starts();
    CHECK(before == 2);

    REQUIRE_FALSE(r.apply_vpn({{"n1", true}, {"n2", false}}));
    CHECK(unit_starts() == before);
    CHECK(r.status_doc(ServiceType::Vpn).at("state") == "READY");
    CHECK(r.store.get(service_status_key("d1", ServiceType::Vpn))->version == 2);
    CHECK(r.harness.overlays().count("d1") == 1);
}

TEST_CASE("firewall agents install the policy on every attached node") {
    Rig r;
    r.add_node("n1");
    r.add_node("n2");

    FirewallPolicy policy;
    policy.policy_id = "edge";
    policy.default_inbound = FwAction::Allow;
    policy.default_outbound = FwAction::Allow;
    FirewallRule rule;
    rule.priority = 10;
    rule.direction = FwDirection::In;
    rule.protocol = Protocol::Tcp;
    rule.port_lo = 9999;
    rule.port_hi = 9999;
    rule.action = FwAction::Deny;
    policy.rules = {rule};

    auto err = r.settle([&](NetServiceDeployer::ApplyCallback cb) {
        r.net.apply_firewall("d1", {{"n1", false}, {"n2", false}},
                             Document{{"policy", policy.to_document()}}, std::move(cb));
    });
    REQUIRE_FALSE(err);

    CHECK(r.mgr.status("d1.firewall-agent.n1").state == LifecycleState::Ready);
    CHECK(r.mgr.status("d1.firewall-agent.n2").state == LifecycleState::Ready);
    CHECK(r.status_doc(ServiceType::Firewall).at("state") == "READY");
    REQUIRE(r.harness.policies_for("n1").size() == 1);
    REQUIRE(r.harness.policies_for("n2").size() == 1);
    CHECK(r.harness.policies_for("n2")[0].policy_id == "edge");

    auto persisted = r.store.get(firewall_policy_key("d1"));
    REQUIRE(persisted.has_value());
    CHECK(FirewallPolicy::from_document(Document::parse(persisted->value)).rules.size() == 1);

    CHECK_FALSE(r.harness.send(r.packet("n1", "172.16.0.2", 9999)).delivered);
    CHECK(r.harness.send(r.packet("n1", "172.16.0.2", 9999)).reason == "firewall-deny");
    CHECK(r.harness.send(r.packet("n1", "172.16.0.2", 80)).delivered);
    CHECK(r.harness.send(r.packet("n2", "172.16.0.1", 9999)).reason == "firewall-deny");
}

TEST_CASE("a firewall launch failure fails the status and installs nothing") {
    Rig r;
    r.add_node("n1");
    r.add_node("n2");
    r.harness.inject_fault("node:n2", "fail-always");

    auto err = r.settle([&](NetServiceDeployer::ApplyCallback cb) {
        r.net.apply_firewall("d1", {{"n1", false}, {"n2", false}}, Document::object(),
                             std::move(cb));
    });
    REQUIRE(err.has_value());
    CHECK(err->code() == Errc::launch_fault);
    CHECK(r.status_doc(ServiceType::Firewall).at("state") == "FAILED");
    CHECK(r.harness.policies_for("n1").empty());
    CHECK_FALSE(r.store.get(firewall_policy_key("d1")).has_value());
}

TEST_CASE("the load balancer fronts the first node over backends on all of them") {
    Rig r;
    r.add_node("n1");
    r.add_node("n2");
    r.add_node("n3");

    auto err = r.settle([&](NetServiceDeployer::ApplyCallback cb) {
        r.net.apply_load_balancer("d1", {{"n1", false}, {"n2", false}, {"n3", false}},
                                  Document{{"listen_port", 80}, {"backend_port", 8081}},
                                  std::move(cb));
    });
    REQUIRE_FALSE(err);

    auto frontend = r.mgr.status("d1.lb-frontend.n1");
    CHECK(frontend.state == LifecycleState::Ready);
    REQUIRE(frontend.endpoints.size() == 1);
    CHECK(frontend.endpoints[0].name == "lb");
    CHECK(frontend.endpoints[0].address == "172.16.0.1");
    CHECK(frontend.endpoints[0].port == 80);
    CHECK(r.harness.units_on("n2").empty());
    CHECK(r.harness.units_on("n3").empty());

    auto pool_entry = r.store.get(lb_pool_key("d1"));
    REQUIRE(pool_entry.has_value());
    auto pool = LbPool::from_document(Document::parse(pool_entry->value));
    CHECK(pool.listen_port() == 80);
    CHECK(pool.algorithm() == LbAlgorithm::RoundRobin);
    REQUIRE(pool.backends().size() == 3);
    CHECK(pool.backends()[1].node_id == "n2");
    CHECK(pool.backends()[1].port == 8081);
    CHECK(pool.pick() == 0);
    CHECK(pool.pick() == 1);
    CHECK(pool.pick() == 2);
    CHECK(pool.pick() == 0);
    CHECK(r.status_doc(ServiceType::LoadBalancer).at("state") == "READY");
}

TEST_CASE("network service applies validate their inputs") {
    Rig r;
    r.add_node("n1");
    r.add_node("n2");
    r.add_node("n3");
    auto noop = [](std::optional<Error>) {};

    CHECK_THROWS_AS(r.net.apply_vpn("d1", {{"n1", false}, {"ghost", false}}, Document::object(),
                                    noop),
                    Error);
    CHECK_THROWS_AS(r.net.apply_vpn("d1", {{"n1", false}}, Document::object(), noop), Error);
    CHECK_THROWS_AS(r.net.apply_vpn("d1", {{"n1", false}, {"n2", false}, {"n3", false}},
                                    Document{{"subnet", "10.8.0.0/30"}}, noop),
                    Error);
    CHECK_THROWS_AS(r.net.apply_vpn("bad dep", {{"n1", false}, {"n2", false}}, Document::object(),
                                    noop),
                    Error);
    CHECK_THROWS_AS(r.net.apply_load_balancer("d1", {}, Document::object(), noop), Error);
    CHECK_THROWS_AS(r.net.apply_firewall("d1", {}, Document::object(), noop), Error);
    CHECK_THROWS_AS(r.net.apply(ServiceType::App, "d1", {{"n1", false}}, Document::object(), noop),
                    Error);

    FirewallPolicy bad;
    bad.policy_id = "bad";
    FirewallRule a;
    a.priority = 5;
    FirewallRule b;
    b.priority = 5;
    bad.rules = {a, b};
    CHECK_THROWS_AS(r.net.apply_firewall("d1", {{"n1", false}},
                                         Document{{"policy", bad.to_document()}}, noop),
                    Error);

    // Nothing was deployed by any rejected call.
    CHECK(r.mgr.instances("d1").empty());
}

TEST_CASE("the apply dispatcher routes by service type") {
    Rig r;
    r.add_node("n1");
    r.add_node("n2");

    auto err = r.settle([&](NetServiceDeployer::ApplyCallback cb) {
        r.net.apply(ServiceType::Vpn, "d1", {{"n1", true}, {"n2", false}}, Document::object(),
                    std::move(cb));
    });
    REQUIRE_FALSE(err);
    CHECK(r.status_doc(ServiceType::Vpn).at("state") == "READY");

    err = r.settle([&](NetServiceDeployer::ApplyCallback cb) {
        r.net.apply(ServiceType::LoadBalancer, "d1", {{"n1", false}}, Document::object(),
                    std::move(cb));
    });
    REQUIRE_FALSE(err);
    CHECK(LbPool::from_document(Document::parse(r.store.get(lb_pool_key("d1"))->value))
              .listen_port() == 80);
}
