// SPDX-License-Identifier: Apache-2.0
#include "net_services.hpp"

#include <algorithm>
#include <memory>

#include "firewall.hpp"
#include "load_balancer.hpp"
#include "vpn.hpp"

namespace netsmo {

namespace {

constexpr const char* kVpnServerService = "vpn-server";
constexpr const char* kVpnClientService = "vpn-client";
constexpr const char* kFirewallService = "firewall-agent";
constexpr const char* kLbService = "lb-frontend";

StateKey deployment_key(const std::string& deployment_id) {
    if (!valid_key_segment(deployment_id))
        throw Error(Errc::bad_request, "invalid deployment id: " + deployment_id);
    return StateKey::parse("deploy").child(deployment_id);
}

}  // namespace

StateKey service_status_key(const std::string& deployment_id, ServiceType type) {
    return deployment_key(deployment_id)
        .child("services")
        .child(service_type_name(type))
        .child("status");
}

StateKey overlay_key(const std::string& deployment_id) {
    return deployment_key(deployment_id).child("vpn").child("overlay");
}

StateKey overlay_member_key(const std::string& deployment_id, const std::string& node_id) {
    return deployment_key(deployment_id).child("vpn").child("members").child(node_id);
}

StateKey firewall_policy_key(const std::string& deployment_id) {
    return deployment_key(deployment_id).child("services").child("FIREWALL").child("policy");
}

StateKey lb_pool_key(const std::string& deployment_id) {
    return deployment_key(deployment_id).child("services").child("LOAD_BALANCER").child("pool");
}

NetServiceDeployer::NetServiceDeployer(StateStore& store, ServiceManager& manager,
                                       SimHarness& harness)
    : store_(store), manager_(manager), harness_(harness) {}

void NetServiceDeployer::ensure_descriptor(const std::string& service_id, ServiceType type,
                                           const std::string& image_ref, Document config) {
    if (manager_.has_service(service_id)) return;
    ServiceDescriptor descriptor;
    descriptor.service_id = service_id;
    descriptor.service_type = type;
    descriptor.version = "1";
    descriptor.launch_spec.image_ref = image_ref;
    descriptor.config = std::move(config);
    manager_.register_service(descriptor);
}

void NetServiceDeployer::write_status(const std::string& deployment_id, ServiceType type,
                                      bool ready, const std::optional<Error>& error) {
    Document doc{{"state", ready ? "READY" : "FAILED"}};
    if (error)
        doc["error"] = Document{{"code", errc_name(error->code())}, {"message", error->what()}};
    store_.put(service_status_key(deployment_id, type), doc.dump());
}

void NetServiceDeployer::rollback_live(const std::string& deployment_id,
                                       const std::vector<std::string>& service_ids) {
    for (const auto& instance : manager_.instances(deployment_id)) {
        if (std::find(service_ids.begin(), service_ids.end(), instance.service_id) ==
            service_ids.end())
            continue;
        if (instance.state == LifecycleState::Ready || instance.state == LifecycleState::Running)
            manager_.stop(instance.instance_id);
    }
}

std::optional<Error> NetServiceDeployer::first_failure(
    const std::vector<ServiceInstance>& results, Errc code, const std::string& what) {
    Document failed = Document::array();
    for (const auto& inst : results)
        if (inst.state != LifecycleState::Ready && inst.state != LifecycleState::Running)
            failed.push_back(inst.node_id);
    if (failed.empty()) return std::nullopt;
    return Error(code, what, Document{{"nodes", failed}});
}

void NetServiceDeployer::apply_vpn(const std::string& deployment_id,
                                   const std::vector<AttachedNode>& nodes, const Document& params,
                                   ApplyCallback done) {
    deployment_key(deployment_id);
    std::vector<VpnMemberSpec> members;
    members.reserve(nodes.size());
    for (const auto& attached : nodes) {
        const SimNode* node = harness_.node(attached.node_id);
        if (!node)
            throw Error(Errc::unknown_node, "unknown node: " + attached.node_id,
                        Document{{"node_id", attached.node_id}});
        members.push_back({attached.node_id, attached.server_tag, node->underlay_address});
    }
    std::optional<Cidr> subnet;
    if (params.contains("subnet")) subnet = Cidr::parse(params.at("subnet").get<std::string>());

    auto overlay = std::make_shared<OverlayNetwork>(plan_vpn(deployment_id, members, subnet));

    ensure_descriptor(kVpnServerService, ServiceType::Vpn, kVpnServerService,
                      Document{{"port", kVpnServerPort}});
    ensure_descriptor(kVpnClientService, ServiceType::Vpn, kVpnClientService, Document::object());

    std::vector<std::string> client_nodes;
    for (const auto& member : overlay->members)
        if (member.role == VpnRole::Client) client_nodes.push_back(member.node_id);

    auto finish_failed = [this, deployment_id, done](Error err) {
        rollback_live(deployment_id, {kVpnServerService, kVpnClientService});
        write_status(deployment_id, ServiceType::Vpn, false, err);
        done(std::move(err));
    };

    manager_.deploy_async(
        kVpnServerService, {overlay->server_node}, deployment_id,
        [this, deployment_id, overlay, client_nodes, finish_failed,
         done](const std::vector<ServiceInstance>& server_result) {
            if (auto err = first_failure(server_result, Errc::launch_fault,
                                         "vpn server failed to deploy")) {
                finish_failed(std::move(*err));
                return;
            }
            manager_.set_endpoints(
                server_result.front().instance_id,
                {{"vpn", overlay->server_underlay.str(), overlay->server_port}});
            manager_.deploy_async(
                kVpnClientService, client_nodes, deployment_id,
                [this, deployment_id, overlay, finish_failed,
                 done](const std::vector<ServiceInstance>& client_results) {
                    if (auto err = first_failure(client_results, Errc::launch_fault,
                                                 "vpn client failed to deploy")) {
                        finish_failed(std::move(*err));
                        return;
                    }
                    harness_.register_overlay(*overlay, deployment_id);
                    store_.put(overlay_key(deployment_id), overlay->to_document().dump());
                    for (const auto& member : overlay->members)
                        store_.put(overlay_member_key(deployment_id, member.node_id),
                                   overlay->member_config(member.node_id).dump());
                    write_status(deployment_id, ServiceType::Vpn, true, std::nullopt);
                    done(std::nullopt);
                });
        });
}

void NetServiceDeployer::apply_firewall(const std::string& deployment_id,
                                        const std::vector<AttachedNode>& nodes,
                                        const Document& params, ApplyCallback done) {
    deployment_key(deployment_id);
    if (nodes.empty()) throw Error(Errc::bad_request, "firewall needs at least one node");
    FirewallPolicy policy;
    policy.policy_id = deployment_id + ".fw";
    if (params.contains("policy")) policy = FirewallPolicy::from_document(params.at("policy"));
    policy.validate();

    ensure_descriptor(kFirewallService, ServiceType::Firewall, kFirewallService,
                      Document::object());

    std::vector<std::string> placement;
    for (const auto& attached : nodes) placement.push_back(attached.node_id);

    manager_.deploy_async(
        kFirewallService, placement, deployment_id,
        [this, deployment_id, placement, policy,
         done](const std::vector<ServiceInstance>& results) {
            if (auto err =
                    first_failure(results, Errc::launch_fault, "firewall agent failed to deploy")) {
                write_status(deployment_id, ServiceType::Firewall, false, *err);
                done(std::move(*err));
                return;
            }
            for (const auto& node_id : placement) harness_.attach_policy(node_id, policy);
            store_.put(firewall_policy_key(deployment_id), policy.to_document().dump());
            write_status(deployment_id, ServiceType::Firewall, true, std::nullopt);
            done(std::nullopt);
        });
}

void NetServiceDeployer::apply_load_balancer(const std::string& deployment_id,
                                             const std::vector<AttachedNode>& nodes,
                                             const Document& params, ApplyCallback done) {
    deployment_key(deployment_id);
    if (nodes.empty()) throw Error(Errc::bad_request, "load balancer needs at least one node");
    int listen_port = params.value("listen_port", 80);
    int backend_port = params.value("backend_port", 8080);
    LbAlgorithm algorithm = parse_lb_algorithm(
        params.value("algorithm", std::string(lb_algorithm_name(LbAlgorithm::RoundRobin))));

    std::vector<LbBackend> backends;
    for (const auto& attached : nodes) backends.push_back({attached.node_id, backend_port, 0, false});
    LbPool pool(deployment_id + ".lb", listen_port, algorithm, std::move(backends));

    ensure_descriptor(kLbService, ServiceType::LoadBalancer, kLbService, Document::object());

    const std::string frontend = nodes.front().node_id;
    manager_.deploy_async(
        kLbService, {frontend}, deployment_id,
        [this, deployment_id, frontend, listen_port, pool,
         done](const std::vector<ServiceInstance>& results) {
            if (auto err = first_failure(results, Errc::launch_fault,
                                         "load balancer frontend failed to deploy")) {
                write_status(deployment_id, ServiceType::LoadBalancer, false, *err);
                done(std::move(*err));
                return;
            }
            const SimNode* node = harness_.node(frontend);
            manager_.set_endpoints(results.front().instance_id,
                                   {{"lb", node ? node->underlay_address.str() : "", listen_port}});
            store_.put(lb_pool_key(deployment_id), pool.to_document().dump());
            write_status(deployment_id, ServiceType::LoadBalancer, true, std::nullopt);
            done(std::nullopt);
        });
}

void NetServiceDeployer::apply(ServiceType type, const std::string& deployment_id,
                               const std::vector<AttachedNode>& nodes, const Document& params,
                               ApplyCallback done) {
    switch (type) {
    case ServiceType::Vpn:
        apply_vpn(deployment_id, nodes, params, std::move(done));
        return;
    case ServiceType::Firewall:
        apply_firewall(deployment_id, nodes, params, std::move(done));
        return;
    case ServiceType::LoadBalancer:
        apply_load_balancer(deployment_id, nodes, params, std::move(done));
        return;
    default:
        throw Error(Errc::bad_request,
                    std::string("not a network service type: ") + service_type_name(type));
    }
}

}  // namespace netsmo
