// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clock.hpp"
#include "document.hpp"
#include "errors.hpp"
#include "firewall.hpp"
#include "state_store.hpp"
#include "trace.hpp"
#include "vpn.hpp"

namespace netsmo {

/// Latency in ticks: fixed when lo == hi, otherwise uniform on [lo, hi]
/// sampled from the scenario seed.
struct LatencySpec {
    Tick lo = 1;
    Tick hi = 1;

    bool fixed() const { return lo == hi; }
    Document to_document() const;
    static LatencySpec from_document(const Document& doc);
};

struct CloudSpec {
    std::string cloud_id;
    std::size_t capacity = 0;
    LatencySpec provision_latency;
};

struct FaultSpec {
    std::string target;  // "node:<id>" | "cloud:<id>" | "step:<KIND>"
    std::string mode;    // "fail-once" | "fail-always"
};

/// World configuration: clouds, latencies, seed, fault schedule.
struct ScenarioSpec {
    std::uint64_t seed = 1;
    std::vector<CloudSpec> clouds;
    Tick agent_boot_latency = 1;
    Tick default_image_latency = 1;
    std::map<std::string, Tick> image_start_latency;  // by image_ref
    Tick barrier_timeout = 1000;
    std::vector<FaultSpec> faults;

    Document to_document() const;
    static ScenarioSpec from_document(const Document& doc);
};

enum class AgentState { Down, Booting, Up };
enum class UnitState { Created, Running, Stopped, Failed };

const char* agent_state_name(AgentState s);
const char* unit_state_name(UnitState s);

struct SimNode {
    std::string node_id;
    std::string cloud_id;
    std::string deployment_id;
    Ipv4 underlay_address;
    std::set<std::string> roles;
    bool is_public = false;
    AgentState agent = AgentState::Down;
};

struct ExecUnit {
    std::string unit_id;
    std::string node_id;
    std::string image_ref;
    std::string owner_instance;
    UnitState state = UnitState::Created;
};

struct SendResult {
    bool delivered = false;
    std::string reason;  // empty when delivered
    std::vector<std::string> hops;

    Document to_document() const;
};

struct OverlayRecord {
    OverlayNetwork overlay;
    std::string deployment_id;
};

class SimHarness;

/// Overlay-address delivery: same-overlay membership plus the destination
/// node's inbound firewall decide; routes are hub-and-spoke through the
/// server. Invoked by SimHarness::send for overlay destinations.
SendResult overlay_deliver(const SimPacket& packet, const SimHarness& harness);

/// Deterministic multi-cloud world model. Single-threaded by contract: every
/// operation runs on the simulation thread and async completions are ordinary
/// clock events. All world state is mirrored into the state store under sim/,
/// so a process can be killed and rehydrated from a snapshot.
class SimHarness {
public:
    using Callback = std::function<void(std::optional<Error>)>;
    using UnitCallback = std::function<void(std::optional<Error>, const std::string& unit_id)>;

    SimHarness(ScenarioSpec scenario, SimClock& clock, StateStore& store, TraceLog& trace);
    static std::unique_ptr<SimHarness> rehydrate(SimClock& clock, StateStore& store,
                                                 TraceLog& trace);

    const ScenarioSpec& scenario() const { return scenario_; }
    SimClock& clock() { return clock_; }
    StateStore& store() { return store_; }
    TraceLog& trace() { return trace_; }

    /// Creates the node after the cloud's sampled latency. Capacity is
    /// reserved up front. Re-provisioning an existing node id is an idempotent
    /// success (crash-resume re-runs land here). Cloud faults surface through
    /// the callback at the completion tick.
    void provision_node_async(const std::string& cloud_id, const std::string& node_id,
                              const std::set<std::string>& roles, const std::string& deployment_id,
                              bool is_public, Callback done);

    /// Agent DOWN -> UP after the scenario boot latency; writes the node's
    /// discovery key. Throws AlreadyUp when the agent is not DOWN.
    void boot_agent_async(const std::string& node_id, Callback done);

    /// Starts an execution unit; RUNNING after the image's start latency.
    /// Fault-marked nodes produce a FAILED unit, reported through the callback
    /// with the unit id. A unit already RUNNING for the same owner is an
    /// idempotent success.
    void run_unit_async(const std::string& node_id, const std::string& image_ref,
                        const std::string& owner_instance, UnitCallback done);

    void stop_unit(const std::string& unit_id);

    /// Underlay destinations deliver within one deployment or between public
    /// nodes; overlay destinations go through overlay_deliver. The destination
    /// node's inbound firewall applies on both paths.
    SendResult send(const SimPacket& packet);

    void inject_fault(const std::string& target, const std::string& mode);
    void clear_fault(const std::string& target);
    /// True when a fault is armed for the target; consumes fail-once faults.
    bool take_fault(const std::string& target);

    const SimNode* node(const std::string& node_id) const;
    std::vector<const SimNode*> nodes() const;
    std::size_t node_count(const std::string& cloud_id) const;
    const ExecUnit* unit(const std::string& unit_id) const;
    std::vector<const ExecUnit*> units_on(const std::string& node_id) const;

    void register_overlay(const OverlayNetwork& overlay, const std::string& deployment_id);
    void unregister_overlay(const std::string& network_id);
    const std::map<std::string, OverlayRecord>& overlays() const { return overlays_; }

    void attach_policy(const std::string& node_id, const FirewallPolicy& policy);
    std::vector<FirewallPolicy> policies_for(const std::string& node_id) const;

private:
    struct FaultRec {
        std::string mode;
        bool spent = false;
    };

    Tick sample_provision_latency(const CloudSpec& cloud);
    Tick image_latency(const std::string& image_ref) const;
    const CloudSpec* cloud(const std::string& cloud_id) const;
    void persist_node(const SimNode& n);
    void persist_unit(const ExecUnit& u);
    void persist_counters();
    void persist_faults();
    Ipv4 next_address();
    void validate_fault_target(const std::string& target) const;

    ScenarioSpec scenario_;
    SimClock& clock_;
    StateStore& store_;
    TraceLog& trace_;

    std::map<std::string, SimNode> nodes_;
    std::map<std::string, ExecUnit> units_;
    std::map<std::string, std::size_t> reserved_;  // in-flight provisions per cloud
    std::map<std::string, FaultRec> faults_;
    std::map<std::string, OverlayRecord> overlays_;
    std::map<std::string, std::vector<FirewallPolicy>> policies_;

    std::uint64_t addr_counter_ = 0;
    std::uint64_t anon_unit_counter_ = 0;
    std::map<std::string, std::uint64_t> draw_counter_;  // per cloud
};

}  // namespace netsmo
