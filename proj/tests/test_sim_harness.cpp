// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "sim_harness.hpp"
#include "vpn.hpp"

using namespace netsmo;

namespace {

struct World {
    SimClock clock;
    StateStore store{clock};
    TraceLog trace;
    SimHarness harness;

    explicit World(ScenarioSpec spec) : harness(std::move(spec), clock, store, trace) {}
};

ScenarioSpec fixed_scenario() {
    ScenarioSpec s;
    s.seed = 1;
    s.clouds = {CloudSpec{"c1", 8, LatencySpec{10, 10}}};
    s.agent_boot_latency = 3;
    s.default_image_latency = 2;
    s.image_start_latency = {{"heavy", 7}};
    return s;
}

ScenarioSpec sampled_scenario() {
    ScenarioSpec s;
    s.seed = 42;
    s.clouds = {CloudSpec{"aws", 8, LatencySpec{5, 15}}, CloudSpec{"gcp", 8, LatencySpec{2, 8}}};
    return s;
}

void must_provision(World& w, const std::string& cloud, const std::string& node,
                    const std::string& deployment = "", bool is_public = false,
                    std::set<std::string> roles = {}) {
    bool ok = false;
    w.harness.provision_node_async(cloud, node, roles, deployment, is_public,
                                   [&](std::optional<Error> err) {
                                       REQUIRE_FALSE(err.has_value());
                                       ok = true;
                                   });
    w.clock.run_until_idle();
    REQUIRE(ok);
}

void must_boot(World& w, const std::string& node) {
    bool ok = false;
    w.harness.boot_agent_async(node, [&](std::optional<Error> err) {
        REQUIRE_FALSE(err.has_value());
        ok = true;
    });
    w.clock.run_until_idle();
    REQUIRE(ok);
}

std::string must_run_unit(World& w, const std::string& node, const std::string& image,
                          const std::string& owner) {
    std::string unit_id;
    w.harness.run_unit_async(node, image, owner, [&](std::optional<Error> err, const std::string& id) {
        REQUIRE_FALSE(err.has_value());
        unit_id = id;
    });
    w.clock.run_until_idle();
    REQUIRE_FALSE(unit_id.empty());
    return unit_id;
}

SimPacket packet_to(const std::string& src_node, const std::string& dst, int port = 80) {
    SimPacket p;
    p.src_node = src_node;
    p.dst_address = Ipv4::parse(dst);
    p.protocol = Protocol::Tcp;
    p.dst_port = port;
    return p;
}

}  // namespace

TEST_CASE("provisioning completes after the cloud latency and assigns addresses in order") {
    World w(fixed_scenario());
    std::map<std::string, Tick> done_at;
    for (const char* node : {"a", "b"}) {
        w.harness.provision_node_async("c1", node, {"app"}, "d1", false,
                                       [&, node](std::optional<Error> err) {
                                           REQUIRE_FALSE(err.has_value());
                                           done_at[node] = w.clock.now();
                                       });
    }
    w.clock.run_until_idle();
    CHECK(done_at["a"] == 10);
    CHECK(done_at["b"] == 10);

    const SimNode* a = w.harness.node("a");
    REQUIRE(a != nullptr);
    CHECK(a->underlay_address.str() == "172.16.0.1");
    CHECK(a->cloud_id == "c1");
    CHECK(a->deployment_id == "d1");
    CHECK(a->roles == std::set<std::string>{"app"});
    CHECK(a->agent == AgentState::Down);
    CHECK(w.harness.node("b")->underlay_address.str() == "172.16.0.2");
    CHECK(w.harness.node_count("c1") == 2);
    CHECK(w.harness.node("missing") == nullptr);

    std::vector<std::string> kinds;
    for (const auto& ev : w.trace.events())
        if (ev.target == "a") kinds.push_back(ev.kind);
    CHECK(kinds == std::vector<std::string>{"provision-start", "provision-done"});
}

TEST_CASE("uniform provision latency reproduces the frozen sample stream") {
    World w(sampled_scenario());
    std::map<std::string, Tick> done_at;
    auto issue = [&](const std::string& cloud, const std::string& node) {
        w.harness.provision_node_async(cloud, node, {}, "", false,
                                       [&, node](std::optional<Error> err) {
                                           REQUIRE_FALSE(err.has_value());
                                           done_at[node] = w.clock.now();
                                       });
    };
    issue("aws", "a0");
    issue("aws", "a1");
    issue("aws", "a2");
    issue("gcp", "g0");
    issue("gcp", "g1");
    w.clock.run_until_idle();

    // seed 42: aws draws 15, 13, 7; gcp draws 4, 2. Streams are independent.
    CHECK(done_at["a0"] == 15);
    CHECK(done_at["a1"] == 13);
    CHECK(done_at["a2"] == 7);
    CHECK(done_at["g0"] == 4);
    CHECK(done_at["g1"] == 2);
}

TEST_CASE("capacity counts in-flight provisions and unknown clouds are rejected") {
    ScenarioSpec s = fixed_scenario();
    s.clouds = {CloudSpec{"small", 2, LatencySpec{5, 5}}};
    World w(s);

    auto ignore = [](std::optional<Error>) {};
    w.harness.provision_node_async("small", "n1", {}, "", false, ignore);
    w.harness.provision_node_async("small", "n2", {}, "", false, ignore);
    try {
        w.harness.provision_node_async("small", "n3", {}, "", false, ignore);
        FAIL("expected a capacity error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::capacity_exceeded);
        CHECK(e.detail().at("capacity") == 2);
    }
    w.clock.run_until_idle();
    CHECK(w.harness.node_count("small") == 2);
    CHECK_THROWS_AS(w.harness.provision_node_async("small", "n3", {}, "", false, ignore), Error);

    CHECK_THROWS_AS(w.harness.provision_node_async("nope", "x", {}, "", false, ignore), Error);
    CHECK_THROWS_AS(w.harness.provision_node_async("small", "bad id", {}, "", false, ignore),
                    Error);
}

TEST_CASE("re-provisioning an existing node is an idempotent success") {
    ScenarioSpec s = fixed_scenario();
    s.clouds = {CloudSpec{"small", 2, LatencySpec{10, 10}}};
    World w(s);
    must_provision(w, "small", "n1", "d1");
    must_provision(w, "small", "n2", "d1");
    auto addr = w.harness.node("n1")->underlay_address;

    // The cloud is full, yet the repeat succeeds without consuming capacity.
    bool ok = false;
    w.harness.provision_node_async("small", "n1", {}, "d1", false, [&](std::optional<Error> err) {
        REQUIRE_FALSE(err.has_value());
        ok = true;
    });
    w.clock.run_until_idle();
    CHECK(ok);
    CHECK(w.harness.node_count("small") == 2);
    CHECK(w.harness.node("n1")->underlay_address == addr);
}

TEST_CASE("agent boot flips the node up and publishes its roles") {
    World w(fixed_scenario());
    CHECK_THROWS_AS(w.harness.boot_agent_async("ghost", [](std::optional<Error>) {}), Error);

    must_provision(w, "c1", "web", "d1", false, {"app", "db"});
    Tick up_at = 0;
    w.harness.boot_agent_async("web", [&](std::optional<Error> err) {
        REQUIRE_FALSE(err.has_value());
        up_at = w.clock.now();
    });
    // Mid-boot the agent is no longer down, so a second boot is rejected.
    CHECK_THROWS_AS(w.harness.boot_agent_async("web", [](std::optional<Error>) {}), Error);
    Tick start = w.clock.now();
    w.clock.run_until_idle();
    CHECK(up_at == start + 3);
    CHECK(w.harness.node("web")->agent == AgentState::Up);

    auto roles = w.store.get(StateKey::parse("deploy/d1/nodes/web/roles"));
    REQUIRE(roles.has_value());
    CHECK(Document::parse(roles->value) == Document{"app", "db"});

    try {
        w.harness.boot_agent_async("web", [](std::optional<Error>) {});
        FAIL("expected an already-up error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::already_up);
    }

    // Nodes outside any deployment publish nothing.
    must_provision(w, "c1", "lone");
    must_boot(w, "lone");
    CHECK(w.store.list(StateKey::parse("deploy/d1/nodes")).size() == 1);
}

TEST_CASE("execution units start after the image latency under their owner's id") {
    World w(fixed_scenario());
    auto cb = [](std::optional<Error>, const std::string&) {};
    CHECK_THROWS_AS(w.harness.run_unit_async("ghost", "img", "", cb), Error);

    must_provision(w, "c1", "web", "d1");
    try {
        w.harness.run_unit_async("web", "img", "", cb);
        FAIL("expected an agent-down error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::agent_down);
    }

    must_boot(w, "web");
    CHECK_THROWS_AS(w.harness.run_unit_async("web", "", "owner", cb), Error);

    Tick t0 = w.clock.now();
    std::string heavy_id;
    Tick heavy_at = 0;
    w.harness.run_unit_async("web", "heavy", "d1.svc.web",
                             [&](std::optional<Error> err, const std::string& id) {
                                 REQUIRE_FALSE(err.has_value());
                                 heavy_id = id;
                                 heavy_at = w.clock.now();
                             });
    w.clock.run_until_idle();
    CHECK(heavy_id == "u.d1.svc.web");
    CHECK(heavy_at == t0 + 7);
    CHECK(w.harness.unit(heavy_id)->state == UnitState::Running);
    CHECK(w.harness.unit(heavy_id)->image_ref == "heavy");

    CHECK(must_run_unit(w, "web", "plain", "") == "u.anon-1");
    CHECK(must_run_unit(w, "web", "plain", "") == "u.anon-2");
    CHECK(w.harness.units_on("web").size() == 3);

    // Re-running an owner whose unit is live changes nothing.
    CHECK(must_run_unit(w, "web", "heavy", "d1.svc.web") == "u.d1.svc.web");
    CHECK(w.harness.units_on("web").size() == 3);

    w.harness.stop_unit(heavy_id);
    CHECK(w.harness.unit(heavy_id)->state == UnitState::Stopped);
    w.harness.stop_unit(heavy_id);  // idempotent
    CHECK_THROWS_AS(w.harness.stop_unit("u.nope"), Error);

    // A stopped owner goes through a full start again.
    Tick t1 = w.clock.now();
    Tick restart_at = 0;
    w.harness.run_unit_async("web", "heavy", "d1.svc.web",
                             [&](std::optional<Error> err, const std::string&) {
                                 REQUIRE_FALSE(err.has_value());
                                 restart_at = w.clock.now();
                             });
    w.clock.run_until_idle();
    CHECK(restart_at == t1 + 7);
    CHECK(w.harness.unit(heavy_id)->state == UnitState::Running);
}

TEST_CASE("node faults fail one launch then clear; cloud faults persist until cleared") {
    World w(fixed_scenario());
    must_provision(w, "c1", "web", "d1");
    must_boot(w, "web");

    w.harness.inject_fault("node:web", "fail-once");
    std::optional<Error> first;
    w.harness.run_unit_async("web", "img", "d1.s.web",
                             [&](std::optional<Error> err, const std::string&) { first = err; });
    w.clock.run_until_idle();
    REQUIRE(first.has_value());
    CHECK(first->code() == Errc::launch_fault);
    CHECK(w.harness.unit("u.d1.s.web")->state == UnitState::Failed);

    // The fault was consumed; the retry comes up clean.
    CHECK(must_run_unit(w, "web", "img", "d1.s.web") == "u.d1.s.web");
    CHECK(w.harness.unit("u.d1.s.web")->state == UnitState::Running);

    w.harness.inject_fault("cloud:c1", "fail-always");
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::optional<Error> err;
        w.harness.provision_node_async("c1", "p1", {}, "", false,
                                       [&](std::optional<Error> e) { err = e; });
        w.clock.run_until_idle();
        REQUIRE(err.has_value());
        CHECK(err->code() == Errc::launch_fault);
        CHECK(w.harness.node("p1") == nullptr);
    }
    w.harness.clear_fault("cloud:c1");
    must_provision(w, "c1", "p1");
}

TEST_CASE("fault targets are validated when armed") {
    World w(fixed_scenario());
    CHECK_THROWS_AS(w.harness.inject_fault("cloud:nope", "fail-once"), Error);
    CHECK_THROWS_AS(w.harness.inject_fault("step:NOPE", "fail-once"), Error);
    CHECK_THROWS_AS(w.harness.inject_fault("weird:x", "fail-once"), Error);
    CHECK_THROWS_AS(w.harness.inject_fault("nocolon", "fail-once"), Error);
    CHECK_THROWS_AS(w.harness.inject_fault("node:", "fail-once"), Error);
    CHECK_THROWS_AS(w.harness.inject_fault("node:x", "sometimes"), Error);
    CHECK_THROWS_AS(w.harness.clear_fault("node:never-armed"), Error);

    // Node targets may be armed before the node exists; step kinds are fixed.
    CHECK_NOTHROW(w.harness.inject_fault("node:future", "fail-once"));
    CHECK_NOTHROW(w.harness.inject_fault("step:PROVISION", "fail-once"));
    CHECK(w.harness.take_fault("step:PROVISION"));
    CHECK_FALSE(w.harness.take_fault("step:PROVISION"));

    w.harness.inject_fault("step:BARRIER_WAIT", "fail-always");
    CHECK(w.harness.take_fault("step:BARRIER_WAIT"));
    CHECK(w.harness.take_fault("step:BARRIER_WAIT"));
    CHECK_FALSE(w.harness.take_fault("step:AGENT_BOOT"));
}

TEST_CASE("scenario fault schedules are armed at construction") {
    ScenarioSpec s = fixed_scenario();
    s.faults = {FaultSpec{"node:web", "fail-once"}};
    World w(s);
    CHECK(w.harness.take_fault("node:web"));
    CHECK_FALSE(w.harness.take_fault("node:web"));
}

TEST_CASE("underlay delivery follows deployment and visibility boundaries") {
    World w(fixed_scenario());
    must_provision(w, "c1", "a1", "d1");
    must_provision(w, "c1", "a2", "d1");
    must_provision(w, "c1", "b1", "d2");
    must_provision(w, "c1", "p1", "d1", true);
    must_provision(w, "c1", "p2", "d2", true);

    auto same = w.harness.send(packet_to("a1", "172.16.0.2"));
    CHECK(same.delivered);
    CHECK(same.hops == std::vector<std::string>{"a1", "a2"});

    auto cross = w.harness.send(packet_to("a1", "172.16.0.3"));
    CHECK_FALSE(cross.delivered);
    CHECK(cross.reason == "cross-deployment");

    auto pub = w.harness.send(packet_to("p1", "172.16.0.5"));
    CHECK(pub.delivered);
    CHECK(pub.hops == std::vector<std::string>{"p1", "p2"});

    // Public destination, private source in another deployment: still blocked.
    CHECK_FALSE(w.harness.send(packet_to("a1", "172.16.0.5")).delivered);

    auto self = w.harness.send(packet_to("a1", "172.16.0.1"));
    CHECK(self.delivered);
    CHECK(self.hops == std::vector<std::string>{"a1"});

    auto nowhere = w.harness.send(packet_to("a1", "9.9.9.9"));
    CHECK_FALSE(nowhere.delivered);
    CHECK(nowhere.reason == "unknown-address");

    CHECK_THROWS_AS(w.harness.send(packet_to("ghost", "172.16.0.1")), Error);
}

TEST_CASE("inbound firewall policies filter underlay delivery at the destination") {
    World w(fixed_scenario());
    must_provision(w, "c1", "a1", "d1");
    must_provision(w, "c1", "a2", "d1");

    FirewallPolicy policy;
    policy.policy_id = "block-9999";
    policy.default_inbound = FwAction::Allow;
    FirewallRule deny;
    deny.priority = 1;
    deny.direction = FwDirection::In;
    deny.protocol = Protocol::Tcp;
    deny.src_cidr = Cidr::parse("0.0.0.0/0");
    deny.dst_cidr = Cidr::parse("0.0.0.0/0");
    deny.port_lo = deny.port_hi = 9999;
    deny.action = FwAction::Deny;
    policy.rules = {deny};

    CHECK_THROWS_AS(w.harness.attach_policy("ghost", policy), Error);
    w.harness.attach_policy("a2", policy);
    w.harness.attach_policy("a2", policy);  // same id replaces, not stacks
    CHECK(w.harness.policies_for("a2").size() == 1);

    CHECK(w.harness.send(packet_to("a1", "172.16.0.2", 80)).delivered);
    auto denied = w.harness.send(packet_to("a1", "172.16.0.2", 9999));
    CHECK_FALSE(denied.delivered);
    CHECK(denied.reason == "firewall-deny");
    CHECK(denied.hops == std::vector<std::string>{"a1", "a2"});

    FirewallPolicy broken = policy;
    broken.rules.push_back(deny);  // duplicate priority
    CHECK_THROWS_AS(w.harness.attach_policy("a1", broken), Error);
}

TEST_CASE("overlay delivery relays client traffic through the hub") {
    World w(fixed_scenario());
    must_provision(w, "c1", "a1", "d1");
    must_provision(w, "c1", "a2", "d1");
    must_provision(w, "c1", "b1", "d2");
    must_provision(w, "c1", "p1", "d1", true);

    auto overlay = plan_vpn("net1",
                            {VpnMemberSpec{"a1", true, w.harness.node("a1")->underlay_address},
                             VpnMemberSpec{"a2", false, w.harness.node("a2")->underlay_address},
                             VpnMemberSpec{"b1", false, w.harness.node("b1")->underlay_address}},
                            std::nullopt);
    w.harness.register_overlay(overlay, "d1");
    REQUIRE(w.harness.overlays().count("net1") == 1);

    // a1 serves at .1; a2 and b1 are clients at .2 and .3.
    auto relayed = w.harness.send(packet_to("a2", "10.8.0.3"));
    CHECK(relayed.delivered);
    CHECK(relayed.hops == std::vector<std::string>{"a2", "a1", "b1"});

    auto from_hub = w.harness.send(packet_to("a1", "10.8.0.2"));
    CHECK(from_hub.delivered);
    CHECK(from_hub.hops == std::vector<std::string>{"a1", "a2"});

    auto to_hub = w.harness.send(packet_to("a2", "10.8.0.1"));
    CHECK(to_hub.delivered);
    CHECK(to_hub.hops == std::vector<std::string>{"a2", "a1"});

    auto self = w.harness.send(packet_to("a1", "10.8.0.1"));
    CHECK(self.delivered);
    CHECK(self.hops == std::vector<std::string>{"a1"});

    auto outsider = w.harness.send(packet_to("p1", "10.8.0.2"));
    CHECK_FALSE(outsider.delivered);
    CHECK(outsider.reason == "not-a-member");

    auto vacant = w.harness.send(packet_to("a1", "10.8.0.9"));
    CHECK_FALSE(vacant.delivered);
    CHECK(vacant.reason == "not-a-member");

    // Destination-side inbound filtering sees the tunnel source address.
    FirewallPolicy policy;
    policy.policy_id = "no-a2";
    policy.default_inbound = FwAction::Allow;
    FirewallRule deny;
    deny.priority = 1;
    deny.direction = FwDirection::In;
    deny.protocol = Protocol::Any;
    deny.src_cidr = Cidr::parse("10.8.0.2/32");
    deny.dst_cidr = Cidr::parse("0.0.0.0/0");
    deny.action = FwAction::Deny;
    policy.rules = {deny};
    w.harness.attach_policy("b1", policy);
    auto filtered = w.harness.send(packet_to("a2", "10.8.0.3"));
    CHECK_FALSE(filtered.delivered);
    CHECK(filtered.reason == "firewall-deny");
    CHECK(filtered.hops == std::vector<std::string>{"a2", "a1", "b1"});
    CHECK(w.harness.send(packet_to("a1", "10.8.0.3")).delivered);

    w.harness.unregister_overlay("net1");
    CHECK(w.harness.send(packet_to("a2", "10.8.0.3")).reason == "unknown-address");
}

TEST_CASE("a rehydrated harness continues from the persisted world") {
    ScenarioSpec s = sampled_scenario();
    s.faults = {FaultSpec{"node:w2", "fail-once"}};
    s.agent_boot_latency = 1;
    World w(s);

    must_provision(w, "aws", "w1", "d1", false, {"app"});  // draw 0 = 15
    must_boot(w, "w1");
    must_run_unit(w, "w1", "img", "d1.s.w1");
    must_provision(w, "aws", "w2", "d1");  // draw 1 = 13
    must_boot(w, "w2");
    std::optional<Error> faulted;
    w.harness.run_unit_async("w2", "img", "d1.s.w2",
                             [&](std::optional<Error> err, const std::string&) { faulted = err; });
    w.clock.run_until_idle();
    REQUIRE(faulted.has_value());
    must_provision(w, "aws", "w3", "d1");  // draw 2 = 7

    auto overlay = plan_vpn("net1",
                            {VpnMemberSpec{"w1", true, w.harness.node("w1")->underlay_address},
                             VpnMemberSpec{"w2", false, w.harness.node("w2")->underlay_address}},
                            std::nullopt);
    w.harness.register_overlay(overlay, "d1");
    FirewallPolicy policy;
    policy.policy_id = "p";
    policy.default_inbound = FwAction::Allow;
    w.harness.attach_policy("w1", policy);

    auto image = w.store.snapshot();

    SimClock clock2;
    auto store2 = StateStore::restore(image, clock2);
    TraceLog trace2;
    auto h2 = SimHarness::rehydrate(clock2, *store2, trace2);

    const SimNode* w1 = h2->node("w1");
    REQUIRE(w1 != nullptr);
    CHECK(w1->agent == AgentState::Up);
    CHECK(w1->underlay_address == w.harness.node("w1")->underlay_address);
    CHECK(w1->roles == std::set<std::string>{"app"});
    CHECK(w1->deployment_id == "d1");
    CHECK(h2->node_count("aws") == 3);
    CHECK(h2->unit("u.d1.s.w1")->state == UnitState::Running);
    CHECK(h2->unit("u.d1.s.w2")->state == UnitState::Failed);
    CHECK(h2->overlays().count("net1") == 1);
    CHECK(h2->policies_for("w1").size() == 1);

    // The consumed fail-once fault stays consumed across the restart.
    CHECK_FALSE(h2->take_fault("node:w2"));

    // Address and sampling streams continue where the first life stopped.
    bool ok = false;
    Tick issued = clock2.now();
    Tick done = 0;
    h2->provision_node_async("aws", "w4", {}, "d1", false, [&](std::optional<Error> err) {
        REQUIRE_FALSE(err.has_value());
        ok = true;
        done = clock2.now();
    });
    clock2.run_until_idle();
    REQUIRE(ok);
    CHECK(done - issued == 7);  // draw 3 of the aws stream
    CHECK(h2->node("w4")->underlay_address.str() == "172.16.0.4");

    // Overlay routing still works from restored state alone.
    CHECK(h2->send(packet_to("w2", "10.8.0.1")).delivered);
}

TEST_CASE("rehydration without a persisted world is an error") {
    SimClock clock;
    StateStore store(clock);
    TraceLog trace;
    CHECK_THROWS_AS(SimHarness::rehydrate(clock, store, trace), Error);
}

TEST_CASE("scenario specs round-trip through documents") {
    ScenarioSpec s = sampled_scenario();
    s.image_start_latency = {{"db", 9}};
    s.faults = {FaultSpec{"cloud:aws", "fail-always"}};
    s.barrier_timeout = 250;
    auto doc = s.to_document();
    auto back = ScenarioSpec::from_document(doc);
    CHECK(back.to_document() == doc);
    CHECK(back.clouds.size() == 2);
    CHECK(back.clouds[0].provision_latency.lo == 5);
    CHECK(back.clouds[0].provision_latency.hi == 15);
    CHECK(back.image_start_latency.at("db") == 9);
    CHECK(back.faults.size() == 1);
    CHECK(back.barrier_timeout == 250);

    CHECK(LatencySpec::from_document(Document{{"fixed", 4}}).fixed());
    CHECK_THROWS_AS(LatencySpec::from_document(Document{{"uniform", {9, 2}}}), Error);
    CHECK_THROWS_AS(LatencySpec::from_document(Document::object()), Error);
    CHECK_THROWS_AS(ScenarioSpec::from_document(Document{{"clouds", {{"cloud_id", "x"}}}}),
                    Error);
}

TEST_CASE("identical scripts leave identical traces and stores") {
    auto script = [](World& w) {
        must_provision(w, "aws", "a", "d1");
        must_provision(w, "gcp", "g", "d1");
        must_boot(w, "a");
        must_run_unit(w, "a", "img", "d1.s.a");
        w.harness.inject_fault("node:a", "fail-once");
        w.harness.send(packet_to("a", "172.16.0.2"));
        w.harness.send(packet_to("a", "1.2.3.4"));
    };
    World w1(sampled_scenario());
    World w2(sampled_scenario());
    script(w1);
    script(w2);
    CHECK(w1.trace.ndjson() == w2.trace.ndjson());
    CHECK(w1.store.snapshot() == w2.store.snapshot());
    CHECK_FALSE(w1.trace.ndjson().empty());
}
