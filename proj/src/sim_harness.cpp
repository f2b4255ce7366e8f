// SPDX-License-Identifier: Apache-2.0
#include "sim_harness.hpp"

#include <algorithm>

#include "keys.hpp"
#include "rng.hpp"

namespace netsmo {

namespace {

const char* kStepKindNames[] = {"PROVISION",    "AGENT_BOOT",              "NET_SERVICE_DEPLOY",
                                "BARRIER_WAIT", "COMPONENT_DEPLOY_SCRIPT", "COMPONENT_APP_SCRIPT"};

Document roles_doc(const std::set<std::string>& roles) {
    Document arr = Document::array();
    for (const auto& r : roles) arr.push_back(r);
    return arr;
}

std::set<std::string> roles_from_doc(const Document& arr) {
    std::set<std::string> roles;
    for (const auto& r : arr) roles.insert(r.get<std::string>());
    return roles;
}

}  // namespace

const char* agent_state_name(AgentState s) {
    switch (s) {
        case AgentState::Down: return "DOWN";
        case AgentState::Booting: return "BOOTING";
        case AgentState::Up: return "UP";
    }
    return "?";
}

const char* unit_state_name(UnitState s) {
    switch (s) {
        case UnitState::Created: return "CREATED";
        case UnitState::Running: return "RUNNING";
        case UnitState::Stopped: return "STOPPED";
        case UnitState::Failed: return "FAILED";
    }
    return "?";
}

Document LatencySpec::to_document() const {
    if (fixed()) return Document{{"fixed", lo}};
    return Document{{"uniform", {lo, hi}}};
}

LatencySpec LatencySpec::from_document(const Document& doc) {
    LatencySpec spec;
    if (doc.contains("fixed")) {
        spec.lo = spec.hi = doc.at("fixed").get<Tick>();
    } else if (doc.contains("uniform")) {
        spec.lo = doc.at("uniform").at(0).get<Tick>();
        spec.hi = doc.at("uniform").at(1).get<Tick>();
    } else {
        throw Error(Errc::parse_error, "latency needs either fixed or uniform");
    }
    if (spec.lo > spec.hi) throw Error(Errc::parse_error, "latency range is inverted");
    return spec;
}

Document ScenarioSpec::to_document() const {
    Document cloud_rows = Document::array();
    for (const auto& c : clouds) {
        cloud_rows.push_back(Document{{"cloud_id", c.cloud_id},
                                      {"capacity", c.capacity},
                                      {"provision_latency", c.provision_latency.to_document()}});
    }
    Document fault_rows = Document::array();
    for (const auto& f : faults) fault_rows.push_back(Document{{"target", f.target}, {"mode", f.mode}});
    return Document{{"seed", seed},
                    {"clouds", cloud_rows},
                    {"agent_boot_latency", agent_boot_latency},
                    {"default_image_latency", default_image_latency},
                    {"image_start_latency", image_start_latency},
                    {"barrier_timeout", barrier_timeout},
                    {"faults", fault_rows}};
}

ScenarioSpec ScenarioSpec::from_document(const Document& doc) {
    try {
        ScenarioSpec spec;
        spec.seed = doc.value("seed", 1ull);
        for (const auto& row : doc.value("clouds", Document::array())) {
            CloudSpec c;
            c.cloud_id = row.at("cloud_id").get<std::string>();
            c.capacity = row.at("capacity").get<std::size_t>();
            if (row.contains("provision_latency"))
                c.provision_latency = LatencySpec::from_document(row["provision_latency"]);
            spec.clouds.push_back(std::move(c));
        }
        spec.agent_boot_latency = doc.value("agent_boot_latency", Tick{1});
        spec.default_image_latency = doc.value("default_image_latency", Tick{1});
        if (doc.contains("image_start_latency"))
            spec.image_start_latency =
                doc["image_start_latency"].get<std::map<std::string, Tick>>();
        spec.barrier_timeout = doc.value("barrier_timeout", Tick{1000});
        for (const auto& row : doc.value("faults", Document::array()))
            spec.faults.push_back(
                FaultSpec{row.at("target").get<std::string>(), row.at("mode").get<std::string>()});
        for (const auto& c : spec.clouds)
            if (!valid_key_segment(c.cloud_id))
                throw Error(Errc::parse_error, "invalid cloud id " + c.cloud_id);
        return spec;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad scenario: ") + e.what());
    }
}

Document SendResult::to_document() const {
    return Document{{"delivered", delivered}, {"reason", reason}, {"hops", hops}};
}

SimHarness::SimHarness(ScenarioSpec scenario, SimClock& clock, StateStore& store, TraceLog& trace)
    : scenario_(std::move(scenario)), clock_(clock), store_(store), trace_(trace) {
    store_.put(StateKey::parse("sim/scenario"), scenario_.to_document().dump());
    persist_counters();
    for (const auto& f : scenario_.faults) inject_fault(f.target, f.mode);
}

std::unique_ptr<SimHarness> SimHarness::rehydrate(SimClock& clock, StateStore& store,
                                                  TraceLog& trace) {
    auto scenario_entry = store.get(StateKey::parse("sim/scenario"));
    if (!scenario_entry) throw Error(Errc::not_found, "no persisted world state");
    auto spec = ScenarioSpec::from_document(Document::parse(scenario_entry->value));

    // The constructor arms the scenario's fault schedule and writes fresh
    // counters, so capture the persisted values first and restore them on top:
    // spent fail-once faults stay spent and sampling streams continue where
    // they left off.
    auto counters_entry = store.get(StateKey::parse("sim/counters"));
    auto faults_entry = store.get(StateKey::parse("sim/faults"));

    auto harness = std::make_unique<SimHarness>(std::move(spec), clock, store, trace);

    if (counters_entry) {
        Document doc = Document::parse(counters_entry->value);
        harness->addr_counter_ = doc.at("addr").get<std::uint64_t>();
        harness->anon_unit_counter_ = doc.at("anon_unit").get<std::uint64_t>();
        harness->draw_counter_ = doc.at("draws").get<std::map<std::string, std::uint64_t>>();
    }
    harness->faults_.clear();
    if (faults_entry) {
        Document fault_doc = Document::parse(faults_entry->value);
        for (const auto& [target, rec] : fault_doc.items())
            harness->faults_[target] =
                FaultRec{rec.at("mode").get<std::string>(), rec.at("spent").get<bool>()};
    }
    harness->persist_counters();
    harness->persist_faults();
    for (const auto& entry : store.list(StateKey::parse("sim/nodes"))) {
        Document doc = Document::parse(entry.value);
        SimNode n;
        n.node_id = doc.at("node_id").get<std::string>();
        n.cloud_id = doc.at("cloud").get<std::string>();
        n.deployment_id = doc.at("deployment").get<std::string>();
        n.underlay_address = Ipv4::parse(doc.at("address").get<std::string>());
        n.roles = roles_from_doc(doc.at("roles"));
        n.is_public = doc.at("public").get<bool>();
        n.agent = doc.at("agent").get<std::string>() == "UP" ? AgentState::Up : AgentState::Down;
        harness->nodes_[n.node_id] = std::move(n);
    }
    for (const auto& entry : store.list(StateKey::parse("sim/units"))) {
        Document doc = Document::parse(entry.value);
        ExecUnit u;
        u.unit_id = doc.at("unit_id").get<std::string>();
        u.node_id = doc.at("node").get<std::string>();
        u.image_ref = doc.at("image").get<std::string>();
        u.owner_instance = doc.at("owner").get<std::string>();
        std::string state = doc.at("state").get<std::string>();
        u.state = state == "RUNNING"   ? UnitState::Running
                  : state == "STOPPED" ? UnitState::Stopped
                  : state == "FAILED"  ? UnitState::Failed
                                       : UnitState::Created;
        harness->units_[u.unit_id] = std::move(u);
    }
    for (const auto& entry : store.list(StateKey::parse("sim/overlays"))) {
        Document doc = Document::parse(entry.value);
        OverlayRecord rec{OverlayNetwork::from_document(doc.at("overlay")),
                          doc.at("deployment").get<std::string>()};
        harness->overlays_[rec.overlay.network_id] = std::move(rec);
    }
    for (const auto& entry : store.list(StateKey::parse("sim/policies"))) {
        Document doc = Document::parse(entry.value);
        std::vector<FirewallPolicy> policies;
        for (const auto& p : doc) policies.push_back(FirewallPolicy::from_document(p));
        harness->policies_[entry.key.segments().back()] = std::move(policies);
    }
    return harness;
}

const CloudSpec* SimHarness::cloud(const std::string& cloud_id) const {
    for (const auto& c : scenario_.clouds)
        if (c.cloud_id == cloud_id) return &c;
    return nullptr;
}

Tick SimHarness::sample_provision_latency(const CloudSpec& cloud) {
    std::uint64_t index = draw_counter_[cloud.cloud_id]++;
    persist_counters();
    const LatencySpec& lat = cloud.provision_latency;
    if (lat.fixed()) return lat.lo;
    return lat.lo + mix_draw(scenario_.seed, cloud.cloud_id, index) % (lat.hi - lat.lo + 1);
}

Tick SimHarness::image_latency(const std::string& image_ref) const {
    auto it = scenario_.image_start_latency.find(image_ref);
    return it == scenario_.image_start_latency.end() ? scenario_.default_image_latency
                                                     : it->second;
}

Ipv4 SimHarness::next_address() {
    ++addr_counter_;
    persist_counters();
    return Ipv4{0xAC100000u + static_cast<std::uint32_t>(addr_counter_)};
}

void SimHarness::persist_node(const SimNode& n) {
    // BOOTING is transient; a crash mid-boot rehydrates as DOWN and re-boots.
    Document doc{{"node_id", n.node_id},
                 {"cloud", n.cloud_id},
                 {"deployment", n.deployment_id},
                 {"address", n.underlay_address.str()},
                 {"roles", roles_doc(n.roles)},
                 {"public", n.is_public},
                 {"agent", n.agent == AgentState::Up ? "UP" : "DOWN"}};
    store_.put(StateKey::parse("sim/nodes").child(n.node_id), doc.dump());
}

void SimHarness::persist_unit(const ExecUnit& u) {
    Document doc{{"unit_id", u.unit_id},
                 {"node", u.node_id},
                 {"image", u.image_ref},
                 {"owner", u.owner_instance},
                 {"state", unit_state_name(u.state)}};
    store_.put(StateKey::parse("sim/units").child(u.unit_id), doc.dump());
}

void SimHarness::persist_counters() {
    Document doc{{"addr", addr_counter_}, {"anon_unit", anon_unit_counter_},
                 {"draws", draw_counter_}};
    store_.put(StateKey::parse("sim/counters"), doc.dump());
}

void SimHarness::persist_faults() {
    Document doc = Document::object();
    for (const auto& [target, rec] : faults_)
        doc[target] = Document{{"mode", rec.mode}, {"spent", rec.spent}};
    store_.put(StateKey::parse("sim/faults"), doc.dump());
}

void SimHarness::provision_node_async(const std::string& cloud_id, const std::string& node_id,
                                      const std::set<std::string>& roles,
                                      const std::string& deployment_id, bool is_public,
                                      Callback done) {
    const CloudSpec* spec = cloud(cloud_id);
    if (!spec) throw Error(Errc::unknown_cloud, "no cloud " + cloud_id);
    if (!valid_key_segment(node_id)) throw Error(Errc::bad_request, "invalid node id " + node_id);

    bool exists = nodes_.count(node_id) > 0;
    if (!exists && node_count(cloud_id) + reserved_[cloud_id] >= spec->capacity)
        throw Error(Errc::capacity_exceeded,
                    cloud_id + " is at capacity " + std::to_string(spec->capacity),
                    Document{{"cloud_id", cloud_id}, {"capacity", spec->capacity}});

    Tick latency = sample_provision_latency(*spec);
    bool fail = take_fault("cloud:" + cloud_id);
    if (!exists) ++reserved_[cloud_id];
    trace_.emit(clock_.now(), "provision-start", node_id,
                Document{{"cloud", cloud_id}, {"latency", latency}});

    clock_.schedule_in(latency, [this, cloud_id, node_id, roles, deployment_id, is_public, exists,
                                 fail, done = std::move(done)] {
        if (!exists && --reserved_[cloud_id] == 0) reserved_.erase(cloud_id);
        if (fail) {
            trace_.emit(clock_.now(), "provision-failed", node_id, Document{{"cloud", cloud_id}});
            done(Error(Errc::launch_fault, "provision fault injected on " + cloud_id,
                       Document{{"cloud_id", cloud_id}, {"node_id", node_id}}));
            return;
        }
        if (!exists) {
            SimNode n;
            n.node_id = node_id;
            n.cloud_id = cloud_id;
            n.deployment_id = deployment_id;
            n.underlay_address = next_address();
            n.roles = roles;
            n.is_public = is_public;
            nodes_[node_id] = n;
            persist_node(n);
        }
        trace_.emit(clock_.now(), "provision-done", node_id,
                    Document{{"cloud", cloud_id},
                             {"address", nodes_[node_id].underlay_address.str()}});
        done(std::nullopt);
    });
}

void SimHarness::boot_agent_async(const std::string& node_id, Callback done) {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw Error(Errc::unknown_node, "no node " + node_id);
    if (it->second.agent != AgentState::Down)
        throw Error(Errc::already_up, "agent on " + node_id + " is not down",
                    Document{{"node_id", node_id}});
    it->second.agent = AgentState::Booting;
    trace_.emit(clock_.now(), "agent-boot-start", node_id);

    clock_.schedule_in(scenario_.agent_boot_latency, [this, node_id, done = std::move(done)] {
        SimNode& n = nodes_[node_id];
        n.agent = AgentState::Up;
        persist_node(n);
        if (!n.deployment_id.empty()) {
            auto key = StateKey::parse("deploy").child(n.deployment_id).child("nodes")
                           .child(node_id).child("roles");
            store_.put(key, roles_doc(n.roles).dump());
        }
        trace_.emit(clock_.now(), "agent-up", node_id);
        done(std::nullopt);
    });
}

void SimHarness::run_unit_async(const std::string& node_id, const std::string& image_ref,
                                const std::string& owner_instance, UnitCallback done) {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw Error(Errc::unknown_node, "no node " + node_id);
    if (it->second.agent != AgentState::Up)
        throw Error(Errc::agent_down, "agent on " + node_id + " is not up",
                    Document{{"node_id", node_id}});
    if (image_ref.empty()) throw Error(Errc::bad_request, "empty image reference");

    std::string unit_id = owner_instance.empty()
                              ? "u.anon-" + std::to_string(++anon_unit_counter_)
                              : "u." + owner_instance;
    if (owner_instance.empty()) persist_counters();

    auto existing = units_.find(unit_id);
    if (existing != units_.end() && existing->second.state == UnitState::Running) {
        clock_.schedule_in(0, [unit_id, done = std::move(done)] { done(std::nullopt, unit_id); });
        return;
    }

    bool fail = take_fault("node:" + node_id);
    ExecUnit u{unit_id, node_id, image_ref, owner_instance, UnitState::Created};
    units_[unit_id] = u;
    persist_unit(u);
    trace_.emit(clock_.now(), "unit-start", unit_id,
                Document{{"node", node_id}, {"image", image_ref}});

    clock_.schedule_in(image_latency(image_ref), [this, unit_id, node_id, fail,
                                                  done = std::move(done)] {
        ExecUnit& u = units_[unit_id];
        if (fail) {
            u.state = UnitState::Failed;
            persist_unit(u);
            trace_.emit(clock_.now(), "unit-failed", unit_id, Document{{"node", node_id}});
            done(Error(Errc::launch_fault, "launch fault injected on " + node_id,
                       Document{{"node_id", node_id}, {"unit_id", unit_id}}),
                 unit_id);
            return;
        }
        u.state = UnitState::Running;
        persist_unit(u);
        trace_.emit(clock_.now(), "unit-running", unit_id);
        done(std::nullopt, unit_id);
    });
}

void SimHarness::stop_unit(const std::string& unit_id) {
    auto it = units_.find(unit_id);
    if (it == units_.end()) throw Error(Errc::not_found, "no unit " + unit_id);
    if (it->second.state == UnitState::Stopped) return;
    it->second.state = UnitState::Stopped;
    persist_unit(it->second);
    trace_.emit(clock_.now(), "unit-stopped", unit_id);
}

SendResult SimHarness::send(const SimPacket& packet) {
    const SimNode* src = node(packet.src_node);
    if (!src) throw Error(Errc::unknown_node, "no node " + packet.src_node);

    SendResult result;
    bool overlay_addressed = false;
    for (const auto& [network_id, rec] : overlays_) {
        if (rec.overlay.subnet.contains(packet.dst_address)) {
            overlay_addressed = true;
            break;
        }
    }

    if (overlay_addressed) {
        result = overlay_deliver(packet, *this);
    } else {
        const SimNode* dst = nullptr;
        for (const auto& [id, n] : nodes_) {
            if (n.underlay_address == packet.dst_address) {
                dst = &n;
                break;
            }
        }
        if (!dst) {
            result = SendResult{false, "unknown-address", {src->node_id}};
        } else if (src->node_id != dst->node_id &&
                   src->deployment_id != dst->deployment_id &&
                   !(src->is_public && dst->is_public)) {
            result = SendResult{false, "cross-deployment", {src->node_id}};
        } else {
            result.hops = {src->node_id};
            if (dst->node_id != src->node_id) result.hops.push_back(dst->node_id);
            SimPacket probe = packet;
            probe.src_address = src->underlay_address;
            result.delivered = true;
            for (const auto& policy : policies_for(dst->node_id)) {
                if (fw_evaluate(policy, probe, FwDirection::In).action == FwAction::Deny) {
                    result = SendResult{false, "firewall-deny", result.hops};
                    break;
                }
            }
        }
    }

    trace_.emit(clock_.now(), "send", src->node_id,
                Document{{"dst", packet.dst_address.str()},
                         {"port", packet.dst_port},
                         {"result", result.to_document()}});
    return result;
}

void SimHarness::validate_fault_target(const std::string& target) const {
    auto colon = target.find(':');
    if (colon == std::string::npos)
        throw Error(Errc::unknown_target, "fault target needs a node:/cloud:/step: prefix");
    std::string ns = target.substr(0, colon);
    std::string name = target.substr(colon + 1);
    if (name.empty()) throw Error(Errc::unknown_target, "empty fault target name");
    if (ns == "node") return;  // nodes may be provisioned after the fault is armed
    if (ns == "cloud") {
        if (!cloud(name)) throw Error(Errc::unknown_target, "no cloud " + name);
        return;
    }
    if (ns == "step") {
        for (const char* kind : kStepKindNames)
            if (name == kind) return;
        throw Error(Errc::unknown_target, "no step kind " + name);
    }
    throw Error(Errc::unknown_target, "unknown fault namespace " + ns);
}

void SimHarness::inject_fault(const std::string& target, const std::string& mode) {
    if (mode != "fail-once" && mode != "fail-always")
        throw Error(Errc::bad_request, "fault mode must be fail-once or fail-always");
    validate_fault_target(target);
    faults_[target] = FaultRec{mode, false};
    persist_faults();
    trace_.emit(clock_.now(), "fault-armed", target, Document{{"mode", mode}});
}

void SimHarness::clear_fault(const std::string& target) {
    auto it = faults_.find(target);
    if (it == faults_.end()) throw Error(Errc::unknown_target, "no fault armed for " + target);
    faults_.erase(it);
    persist_faults();
    trace_.emit(clock_.now(), "fault-cleared", target);
}

bool SimHarness::take_fault(const std::string& target) {
    auto it = faults_.find(target);
    if (it == faults_.end() || it->second.spent) return false;
    if (it->second.mode == "fail-once") {
        it->second.spent = true;
        persist_faults();
    }
    return true;
}

const SimNode* SimHarness::node(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    return it == nodes_.end() ? nullptr : &it->second;
}

std::vector<const SimNode*> SimHarness::nodes() const {
    std::vector<const SimNode*> out;
    out.reserve(nodes_.size());
    for (const auto& [id, n] : nodes_) out.push_back(&n);
    return out;
}

std::size_t SimHarness::node_count(const std::string& cloud_id) const {
    std::size_t n = 0;
    for (const auto& [id, node] : nodes_)
        if (node.cloud_id == cloud_id) ++n;
    return n;
}

const ExecUnit* SimHarness::unit(const std::string& unit_id) const {
    auto it = units_.find(unit_id);
    return it == units_.end() ? nullptr : &it->second;
}

std::vector<const ExecUnit*> SimHarness::units_on(const std::string& node_id) const {
    std::vector<const ExecUnit*> out;
    for (const auto& [id, u] : units_)
        if (u.node_id == node_id) out.push_back(&u);
    return out;
}

void SimHarness::register_overlay(const OverlayNetwork& overlay, const std::string& deployment_id) {
    overlays_[overlay.network_id] = OverlayRecord{overlay, deployment_id};
    Document doc{{"overlay", overlay.to_document()}, {"deployment", deployment_id}};
    store_.put(StateKey::parse("sim/overlays").child(overlay.network_id), doc.dump());
    trace_.emit(clock_.now(), "overlay-registered", overlay.network_id,
                Document{{"subnet", overlay.subnet.str()},
                         {"members", overlay.members.size()}});
}

void SimHarness::unregister_overlay(const std::string& network_id) {
    if (overlays_.erase(network_id) == 0) return;
    store_.remove(StateKey::parse("sim/overlays").child(network_id));
    trace_.emit(clock_.now(), "overlay-removed", network_id);
}

void SimHarness::attach_policy(const std::string& node_id, const FirewallPolicy& policy) {
    policy.validate();
    if (!nodes_.count(node_id)) throw Error(Errc::unknown_node, "no node " + node_id);
    auto& list = policies_[node_id];
    // Re-attaching a policy id replaces it, so re-applied services stay idempotent.
    std::erase_if(list, [&](const FirewallPolicy& p) { return p.policy_id == policy.policy_id; });
    list.push_back(policy);
    Document doc = Document::array();
    for (const auto& p : list) doc.push_back(p.to_document());
    store_.put(StateKey::parse("sim/policies").child(node_id), doc.dump());
    trace_.emit(clock_.now(), "policy-attached", node_id, Document{{"policy", policy.policy_id}});
}

std::vector<FirewallPolicy> SimHarness::policies_for(const std::string& node_id) const {
    auto it = policies_.find(node_id);
    return it == policies_.end() ? std::vector<FirewallPolicy>{} : it->second;
}

SendResult overlay_deliver(const SimPacket& packet, const SimHarness& harness) {
    const OverlayRecord* candidate = nullptr;
    for (const auto& [network_id, rec] : harness.overlays()) {
        if (!rec.overlay.subnet.contains(packet.dst_address)) continue;
        if (rec.overlay.member(packet.src_node)) {
            candidate = &rec;
            break;
        }
    }
    if (!candidate) return SendResult{false, "not-a-member", {packet.src_node}};

    const OverlayNetwork& net = candidate->overlay;
    const OverlayMember* dst = nullptr;
    for (const auto& m : net.members) {
        if (m.overlay_address == packet.dst_address) {
            dst = &m;
            break;
        }
    }
    if (!dst) return SendResult{false, "not-a-member", {packet.src_node}};

    // Hub-and-spoke: client-to-client traffic relays through the server.
    std::vector<std::string> hops;
    if (packet.src_node == dst->node_id) {
        hops = {packet.src_node};
    } else if (packet.src_node == net.server_node || dst->node_id == net.server_node) {
        hops = {packet.src_node, dst->node_id};
    } else {
        hops = {packet.src_node, net.server_node, dst->node_id};
    }

    SimPacket probe = packet;
    probe.src_address = net.member(packet.src_node)->overlay_address;
    for (const auto& policy : harness.policies_for(dst->node_id)) {
        if (fw_evaluate(policy, probe, FwDirection::In).action == FwAction::Deny)
            return SendResult{false, "firewall-deny", hops};
    }
    return SendResult{true, "", hops};
}

}  // namespace netsmo
