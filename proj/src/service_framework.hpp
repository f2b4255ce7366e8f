// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "document.hpp"
#include "errors.hpp"
#include "message_bus.hpp"
#include "state_store.hpp"

namespace netsmo {

enum class LifecycleState { Registered, Deploying, Ready, Running, Stopping, Stopped, Failed };

const char* lifecycle_state_name(LifecycleState s);
LifecycleState parse_lifecycle_state(const std::string& text);

/// Edge test for the instance lifecycle graph. STOPPED is terminal.
bool transition_legal(LifecycleState from, LifecycleState to);

enum class ServiceType { Vpn, Firewall, LoadBalancer, App, Composite };

const char* service_type_name(ServiceType t);
ServiceType parse_service_type(const std::string& text);

struct LaunchSpec {
    std::string image_ref;
    std::vector<std::string> entry_args;
    std::map<std::string, std::string> env;

    Document to_document() const;
    static LaunchSpec from_document(const Document& doc);
};

struct ServiceDescriptor {
    std::string service_id;
    ServiceType service_type = ServiceType::App;
    std::string version;
    std::set<std::string> required_roles;  // node roles the service attaches to
    LaunchSpec launch_spec;
    Document config = Document::object();

    void validate() const;  // throws Error{invalid_descriptor}
    Document to_document() const;
    static ServiceDescriptor from_document(const Document& doc);
};

struct Endpoint {
    std::string name;
    std::string address;
    int port = 0;
};

struct ServiceInstance {
    std::string instance_id;  // "<deployment>.<service>.<node>"
    std::string service_id;
    std::string node_id;
    std::string deployment_id;
    LifecycleState state = LifecycleState::Registered;
    std::vector<Endpoint> endpoints;
    std::string parent_instance;  // empty at the roots of the launch forest
    std::string unit_id;
    bool retried = false;  // the single automatic FAILED->DEPLOYING retry was used

    Document to_document() const;
    static ServiceInstance from_document(const Document& doc);
};

/// How instances are actually launched on nodes. The simulation backend maps
/// one instance to one execution unit; a real backend would drive an OS
/// service manager instead.
class LaunchDriver {
public:
    using LaunchCallback = std::function<void(std::optional<Error>, const std::string& unit_id)>;

    virtual ~LaunchDriver() = default;
    virtual void check_node(const std::string& node_id) const = 0;  // throws Error{unknown_node}
    virtual void launch(const ServiceInstance& instance, const LaunchSpec& spec,
                        LaunchCallback done) = 0;
    virtual void stop(const ServiceInstance& instance) = 0;
    virtual std::string node_address(const std::string& node_id) const = 0;
};

class SimHarness;

class SimLaunchDriver : public LaunchDriver {
public:
    explicit SimLaunchDriver(SimHarness& harness) : harness_(harness) {}

    void check_node(const std::string& node_id) const override;
    void launch(const ServiceInstance& instance, const LaunchSpec& spec,
                LaunchCallback done) override;
    void stop(const ServiceInstance& instance) override;
    std::string node_address(const std::string& node_id) const override;

private:
    SimHarness& harness_;
};

/// Per-service hooks invoked on lifecycle edges. Network services use these to
/// apply or roll back node configuration.
class ManagementLogic {
public:
    virtual ~ManagementLogic() = default;
    virtual void on_ready(const ServiceInstance&) {}
    virtual void on_start(const ServiceInstance&) {}
    virtual void on_stop(const ServiceInstance&) {}
};

/// Service registry plus instance lifecycle engine. Logically an actor: all
/// calls must come from the owning dispatch context; per-deployment operations
/// are serialized by that contract rather than by internal locks. Every state
/// change is persisted before anything reacts to it, so a rebuilt manager over
/// the same store answers identically.
class ServiceManager {
public:
    using DeployCallback = std::function<void(const std::vector<ServiceInstance>&)>;

    ServiceManager(StateStore& store, MessageBus& bus, LaunchDriver& driver);

    std::string register_service(const ServiceDescriptor& descriptor);
    ServiceDescriptor service(const std::string& service_id) const;  // Error{unknown_service}
    std::vector<ServiceDescriptor> services() const;
    bool has_service(const std::string& service_id) const;

    /// One instance per placement node, driven to READY (or FAILED after the
    /// one automatic retry). Instances already READY or RUNNING are returned
    /// as they are. The callback fires once every placement settled.
    void deploy_async(const std::string& service_id, const std::vector<std::string>& placement,
                      const std::string& deployment_id, DeployCallback done);

    /// Registers the child if needed and deploys it under the parent, which
    /// must be READY or RUNNING. Error{parent_not_active} otherwise.
    void launch_subservice_async(const std::string& parent_instance_id,
                                 const ServiceDescriptor& child,
                                 const std::vector<std::string>& placement, DeployCallback done);

    LifecycleState start(const std::string& instance_id);
    /// Stops live children depth-first, then the instance itself.
    LifecycleState stop(const std::string& instance_id);

    ServiceInstance status(const std::string& instance_id) const;  // Error{unknown_instance}
    std::vector<ServiceInstance> instances(const std::string& deployment_id) const;

    void set_endpoints(const std::string& instance_id, std::vector<Endpoint> endpoints);
    void set_logic(const std::string& service_id, std::shared_ptr<ManagementLogic> logic);

    static std::string instance_id(const std::string& deployment_id, const std::string& service_id,
                                   const std::string& node_id);

private:
    void deploy_impl(const ServiceDescriptor& descriptor,
                     const std::vector<std::string>& placement, const std::string& deployment_id,
                     const std::string& parent_instance, DeployCallback done);
    void drive_instance(ServiceInstance instance, const LaunchSpec& spec,
                        std::function<void(ServiceInstance)> settled);
    ServiceInstance transition(ServiceInstance instance, LifecycleState to);
    void persist(const ServiceInstance& instance);
    void publish_lifecycle(const ServiceInstance& instance, const std::string& from);
    std::optional<ServiceInstance> find_instance(const std::string& instance_id) const;
    ManagementLogic* logic_for(const std::string& service_id);

    StateStore& store_;
    MessageBus& bus_;
    LaunchDriver& driver_;
    std::map<std::string, std::shared_ptr<ManagementLogic>> logic_;
};

}  // namespace netsmo
