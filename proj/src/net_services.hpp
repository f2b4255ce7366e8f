// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "document.hpp"
#include "errors.hpp"
#include "keys.hpp"
#include "service_framework.hpp"
#include "sim_harness.hpp"

namespace netsmo {

/// One node a network service attaches to, in recipe order. server_tag marks
/// the designated VPN concentrator.
struct AttachedNode {
    std::string node_id;
    bool server_tag = false;
};

/// "deploy/<dep>/services/<TYPE>/status" - the key readiness barriers watch.
StateKey service_status_key(const std::string& deployment_id, ServiceType type);
StateKey overlay_key(const std::string& deployment_id);
StateKey overlay_member_key(const std::string& deployment_id, const std::string& node_id);
StateKey firewall_policy_key(const std::string& deployment_id);
StateKey lb_pool_key(const std::string& deployment_id);

/// Orchestrates the three concrete network services on top of the service
/// framework. Each apply drives its instances to READY and only then writes
/// the READY status document; any failure writes FAILED instead. All calls
/// belong to the owning deployment's dispatch context.
class NetServiceDeployer {
public:
    using ApplyCallback = std::function<void(std::optional<Error>)>;

    NetServiceDeployer(StateStore& store, ServiceManager& manager, SimHarness& harness);

    /// Plans the overlay, launches the concentrator, then the clients once the
    /// concentrator is READY. Registers the overlay with the harness and
    /// persists it plus the per-member configs before the status write. A
    /// member failure rolls live members back to STOPPED.
    /// params: {"subnet": CIDR string, optional}
    void apply_vpn(const std::string& deployment_id, const std::vector<AttachedNode>& nodes,
                   const Document& params, ApplyCallback done);

    /// Launches one agent per attached node, then installs the policy on each.
    /// params: {"policy": FirewallPolicy document, optional - the conventional
    /// deny-in/allow-out default applies when absent}
    void apply_firewall(const std::string& deployment_id, const std::vector<AttachedNode>& nodes,
                        const Document& params, ApplyCallback done);

    /// Launches the frontend on the first attached node; every attached node
    /// becomes a backend. params: {"listen_port": int (80), "algorithm":
    /// ROUND_ROBIN|LEAST_CONNECTIONS (ROUND_ROBIN), "backend_port": int (8080)}
    void apply_load_balancer(const std::string& deployment_id,
                             const std::vector<AttachedNode>& nodes, const Document& params,
                             ApplyCallback done);

    /// Dispatch by service type, for NET_SERVICE_DEPLOY plan steps.
    void apply(ServiceType type, const std::string& deployment_id,
               const std::vector<AttachedNode>& nodes, const Document& params, ApplyCallback done);

private:
    void ensure_descriptor(const std::string& service_id, ServiceType type,
                           const std::string& image_ref, Document config);
    void write_status(const std::string& deployment_id, ServiceType type, bool ready,
                      const std::optional<Error>& error);
    void rollback_live(const std::string& deployment_id,
                       const std::vector<std::string>& service_ids);
    static std::optional<Error> first_failure(const std::vector<ServiceInstance>& results,
                                              Errc code, const std::string& what);

    StateStore& store_;
    ServiceManager& manager_;
    SimHarness& harness_;
};

}  // namespace netsmo
