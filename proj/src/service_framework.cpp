// SPDX-License-Identifier: Apache-2.0
#include "service_framework.hpp"

#include <memory>

#include "keys.hpp"
#include "sim_harness.hpp"

namespace netsmo {

const char* lifecycle_state_name(LifecycleState s) {
    switch (s) {
        case LifecycleState::Registered: return "REGISTERED";
        case LifecycleState::Deploying: return "DEPLOYING";
        case LifecycleState::Ready: return "READY";
        case LifecycleState::Running: return "RUNNING";
        case LifecycleState::Stopping: return "STOPPING";
        case LifecycleState::Stopped: return "STOPPED";
        case LifecycleState::Failed: return "FAILED";
    }
    return "?";
}

LifecycleState parse_lifecycle_state(const std::string& text) {
    for (auto s : {LifecycleState::Registered, LifecycleState::Deploying, LifecycleState::Ready,
                   LifecycleState::Running, LifecycleState::Stopping, LifecycleState::Stopped,
                   LifecycleState::Failed}) {
        if (text == lifecycle_state_name(s)) return s;
    }
    throw Error(Errc::parse_error, "unknown lifecycle state " + text);
}

bool transition_legal(LifecycleState from, LifecycleState to) {
    switch (from) {
        case LifecycleState::Registered: return to == LifecycleState::Deploying;
        case LifecycleState::Deploying:
            return to == LifecycleState::Ready || to == LifecycleState::Failed;
        case LifecycleState::Ready:
            return to == LifecycleState::Running || to == LifecycleState::Stopping;
        case LifecycleState::Running:
            return to == LifecycleState::Stopping || to == LifecycleState::Failed;
        case LifecycleState::Stopping:
            return to == LifecycleState::Stopped || to == LifecycleState::Failed;
        case LifecycleState::Failed: return to == LifecycleState::Deploying;
        case LifecycleState::Stopped: return false;
    }
    return false;
}

const char* service_type_name(ServiceType t) {
    switch (t) {
        case ServiceType::Vpn: return "VPN";
        case ServiceType::Firewall: return "FIREWALL";
        case ServiceType::LoadBalancer: return "LOAD_BALANCER";
        case ServiceType::App: return "APP";
        case ServiceType::Composite: return "COMPOSITE";
    }
    return "?";
}

ServiceType parse_service_type(const std::string& text) {
    for (auto t : {ServiceType::Vpn, ServiceType::Firewall, ServiceType::LoadBalancer,
                   ServiceType::App, ServiceType::Composite}) {
        if (text == service_type_name(t)) return t;
    }
    throw Error(Errc::parse_error, "unknown service type " + text);
}

Document LaunchSpec::to_document() const {
    return Document{{"image_ref", image_ref}, {"entry_args", entry_args}, {"env", env}};
}

LaunchSpec LaunchSpec::from_document(const Document& doc) {
    LaunchSpec spec;
    spec.image_ref = doc.at("image_ref").get<std::string>();
    spec.entry_args = doc.value("entry_args", std::vector<std::string>{});
    if (doc.contains("env")) spec.env = doc["env"].get<std::map<std::string, std::string>>();
    return spec;
}

void ServiceDescriptor::validate() const {
    if (!valid_key_segment(service_id))
        throw Error(Errc::invalid_descriptor, "invalid service id '" + service_id + "'");
    if (launch_spec.image_ref.empty())
        throw Error(Errc::invalid_descriptor, service_id + " has an empty image reference");
}

Document ServiceDescriptor::to_document() const {
    Document roles = Document::array();
    for (const auto& r : required_roles) roles.push_back(r);
    return Document{{"service_id", service_id},
                    {"service_type", service_type_name(service_type)},
                    {"version", version},
                    {"required_roles", roles},
                    {"launch_spec", launch_spec.to_document()},
                    {"config", config}};
}

ServiceDescriptor ServiceDescriptor::from_document(const Document& doc) {
    try {
        ServiceDescriptor desc;
        desc.service_id = doc.at("service_id").get<std::string>();
        desc.service_type = parse_service_type(doc.at("service_type").get<std::string>());
        desc.version = doc.value("version", "");
        for (const auto& r : doc.value("required_roles", Document::array()))
            desc.required_roles.insert(r.get<std::string>());
        desc.launch_spec = LaunchSpec::from_document(doc.at("launch_spec"));
        desc.config = doc.value("config", Document::object());
        return desc;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad service descriptor: ") + e.what());
    }
}

Document ServiceInstance::to_document() const {
    Document eps = Document::array();
    for (const auto& e : endpoints)
        eps.push_back(Document{{"name", e.name}, {"address", e.address}, {"port", e.port}});
    return Document{{"instance_id", instance_id},
                    {"service_id", service_id},
                    {"node", node_id},
                    {"deployment", deployment_id},
                    {"state", lifecycle_state_name(state)},
                    {"endpoints", eps},
                    {"parent", parent_instance},
                    {"unit_id", unit_id},
                    {"retried", retried}};
}

ServiceInstance ServiceInstance::from_document(const Document& doc) {
    try {
        ServiceInstance inst;
        inst.instance_id = doc.at("instance_id").get<std::string>();
        inst.service_id = doc.at("service_id").get<std::string>();
        inst.node_id = doc.at("node").get<std::string>();
        inst.deployment_id = doc.at("deployment").get<std::string>();
        inst.state = parse_lifecycle_state(doc.at("state").get<std::string>());
        for (const auto& e : doc.at("endpoints")) {
            inst.endpoints.push_back(Endpoint{e.at("name").get<std::string>(),
                                              e.at("address").get<std::string>(),
                                              e.at("port").get<int>()});
        }
        inst.parent_instance = doc.at("parent").get<std::string>();
        inst.unit_id = doc.at("unit_id").get<std::string>();
        inst.retried = doc.at("retried").get<bool>();
        return inst;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad instance record: ") + e.what());
    }
}

void SimLaunchDriver::check_node(const std::string& node_id) const {
    if (!harness_.node(node_id)) throw Error(Errc::unknown_node, "no node " + node_id);
}

void SimLaunchDriver::launch(const ServiceInstance& instance, const LaunchSpec& spec,
                             LaunchCallback done) {
    harness_.run_unit_async(instance.node_id, spec.image_ref, instance.instance_id,
                            std::move(done));
}

void SimLaunchDriver::stop(const ServiceInstance& instance) {
    if (instance.unit_id.empty()) return;
    try {
        harness_.stop_unit(instance.unit_id);
    } catch (const Error& e) {
        if (e.code() != Errc::not_found) throw;  // a never-launched unit is fine to "stop"
    }
}

std::string SimLaunchDriver::node_address(const std::string& node_id) const {
    const SimNode* n = harness_.node(node_id);
    if (!n) throw Error(Errc::unknown_node, "no node " + node_id);
    return n->underlay_address.str();
}

ServiceManager::ServiceManager(StateStore& store, MessageBus& bus, LaunchDriver& driver)
    : store_(store), bus_(bus), driver_(driver) {}

std::string ServiceManager::instance_id(const std::string& deployment_id,
                                        const std::string& service_id,
                                        const std::string& node_id) {
    return deployment_id + "." + service_id + "." + node_id;
}

std::string ServiceManager::register_service(const ServiceDescriptor& descriptor) {
    descriptor.validate();
    auto key = StateKey::parse("registry/services").child(descriptor.service_id);
    if (store_.get(key))
        throw Error(Errc::duplicate_service, descriptor.service_id + " is already registered");
    store_.put(key, descriptor.to_document().dump());

    Envelope env;
    env.topic = "registry/events";
    env.sender = "service-manager";
    env.kind = MsgKind::Event;
    env.payload = Document{{"service_id", descriptor.service_id},
                           {"service_type", service_type_name(descriptor.service_type)}};
    bus_.publish(env);
    return descriptor.service_id;
}

ServiceDescriptor ServiceManager::service(const std::string& service_id) const {
    auto entry = store_.get(StateKey::parse("registry/services").child(service_id));
    if (!entry) throw Error(Errc::unknown_service, "no service " + service_id);
    return ServiceDescriptor::from_document(Document::parse(entry->value));
}

std::vector<ServiceDescriptor> ServiceManager::services() const {
    std::vector<ServiceDescriptor> out;
    for (const auto& entry : store_.list(StateKey::parse("registry/services")))
        out.push_back(ServiceDescriptor::from_document(Document::parse(entry.value)));
    return out;
}

bool ServiceManager::has_service(const std::string& service_id) const {
    return store_.get(StateKey::parse("registry/services").child(service_id)).has_value();
}

void ServiceManager::set_logic(const std::string& service_id,
                               std::shared_ptr<ManagementLogic> logic) {
    logic_[service_id] = std::move(logic);
}

ManagementLogic* ServiceManager::logic_for(const std::string& service_id) {
    auto it = logic_.find(service_id);
    return it == logic_.end() ? nullptr : it->second.get();
}

void ServiceManager::persist(const ServiceInstance& instance) {
    auto key = StateKey::parse("deploy")
                   .child(instance.deployment_id)
                   .child("instances")
                   .child(instance.instance_id);
    store_.put(key, instance.to_document().dump());
}

void ServiceManager::publish_lifecycle(const ServiceInstance& instance, const std::string& from) {
    Envelope env;
    env.topic = "lifecycle/events";
    env.sender = "service-manager";
    env.kind = MsgKind::Event;
    env.payload = Document{{"instance_id", instance.instance_id},
                           {"service_id", instance.service_id},
                           {"node", instance.node_id},
                           {"from", from},
                           {"to", lifecycle_state_name(instance.state)}};
    bus_.publish(env);
}

ServiceInstance ServiceManager::transition(ServiceInstance instance, LifecycleState to) {
    if (!transition_legal(instance.state, to)) {
        throw Error(Errc::illegal_transition,
                    std::string(lifecycle_state_name(instance.state)) + " does not allow " +
                        lifecycle_state_name(to) + " for " + instance.instance_id,
                    Document{{"from", lifecycle_state_name(instance.state)},
                             {"requested", lifecycle_state_name(to)}});
    }
    std::string from = lifecycle_state_name(instance.state);
    instance.state = to;
    persist(instance);
    publish_lifecycle(instance, from);
    return instance;
}

std::optional<ServiceInstance> ServiceManager::find_instance(
    const std::string& instance_id) const {
    for (const auto& entry : store_.list(StateKey::parse("deploy"))) {
        const auto& segs = entry.key.segments();
        if (segs.size() == 4 && segs[2] == "instances" && segs[3] == instance_id)
            return ServiceInstance::from_document(Document::parse(entry.value));
    }
    return std::nullopt;
}

ServiceInstance ServiceManager::status(const std::string& instance_id) const {
    auto inst = find_instance(instance_id);
    if (!inst) throw Error(Errc::unknown_instance, "no instance " + instance_id);
    return *inst;
}

std::vector<ServiceInstance> ServiceManager::instances(const std::string& deployment_id) const {
    std::vector<ServiceInstance> out;
    auto prefix = StateKey::parse("deploy").child(deployment_id).child("instances");
    for (const auto& entry : store_.list(prefix))
        out.push_back(ServiceInstance::from_document(Document::parse(entry.value)));
    return out;
}

void ServiceManager::set_endpoints(const std::string& instance_id,
                                   std::vector<Endpoint> endpoints) {
    auto inst = status(instance_id);
    inst.endpoints = std::move(endpoints);
    persist(inst);
}

void ServiceManager::drive_instance(ServiceInstance instance, const LaunchSpec& spec,
                                    std::function<void(ServiceInstance)> settled) {
    if (instance.state == LifecycleState::Registered || instance.state == LifecycleState::Failed)
        instance = transition(std::move(instance), LifecycleState::Deploying);

    auto complete = [this, settled](ServiceInstance inst, std::optional<Error> err,
                                    const std::string& unit_id) -> bool {
        // Returns true when the instance settled (READY or final FAILED).
        if (!unit_id.empty()) inst.unit_id = unit_id;
        if (!err) {
            if (auto* logic = logic_for(inst.service_id)) {
                try {
                    logic->on_ready(inst);
                } catch (const Error& e) {
                    err = e;
                }
            }
        }
        if (!err) {
            settled(transition(std::move(inst), LifecycleState::Ready));
            return true;
        }
        inst = transition(std::move(inst), LifecycleState::Failed);
        if (inst.retried) {
            settled(std::move(inst));
            return true;
        }
        return false;
    };

    auto launch_safe = [this](const ServiceInstance& inst, const LaunchSpec& spec,
                              const LaunchDriver::LaunchCallback& cb) {
        // Synchronous launch refusals (agent down, bad image) settle the
        // instance through the same failure path as asynchronous ones.
        try {
            driver_.launch(inst, spec, cb);
        } catch (const Error& e) {
            cb(e, "");
        }
    };

    launch_safe(instance, spec,
                [this, instance, spec, complete, launch_safe](std::optional<Error> err,
                                                              const std::string& unit_id) {
                    if (complete(instance, std::move(err), unit_id)) return;

                    // One automatic retry from FAILED.
                    ServiceInstance retry = status(instance.instance_id);
                    retry.retried = true;
                    retry = transition(std::move(retry), LifecycleState::Deploying);
                    launch_safe(retry, spec,
                                [retry, complete](std::optional<Error> err2,
                                                  const std::string& unit2) {
                                    complete(retry, std::move(err2), unit2);
                                });
                });
}

void ServiceManager::deploy_impl(const ServiceDescriptor& descriptor,
                                 const std::vector<std::string>& placement,
                                 const std::string& deployment_id,
                                 const std::string& parent_instance, DeployCallback done) {
    if (!valid_key_segment(deployment_id))
        throw Error(Errc::bad_request, "invalid deployment id '" + deployment_id + "'");
    for (const auto& node : placement) driver_.check_node(node);

    auto results = std::make_shared<std::vector<ServiceInstance>>(placement.size());
    auto remaining = std::make_shared<std::size_t>(placement.size());
    if (placement.empty()) {
        done(*results);
        return;
    }

    for (std::size_t i = 0; i < placement.size(); ++i) {
        const std::string& node = placement[i];
        std::string iid = instance_id(deployment_id, descriptor.service_id, node);
        auto settle = [results, remaining, done, i](ServiceInstance inst) {
            (*results)[i] = std::move(inst);
            if (--*remaining == 0) done(*results);
        };

        auto key = StateKey::parse("deploy").child(deployment_id).child("instances").child(iid);
        std::optional<ServiceInstance> existing;
        if (auto entry = store_.get(key))
            existing = ServiceInstance::from_document(Document::parse(entry->value));

        ServiceInstance inst;
        if (existing && existing->state != LifecycleState::Stopped &&
            existing->state != LifecycleState::Stopping) {
            inst = *existing;
            if (inst.state == LifecycleState::Ready || inst.state == LifecycleState::Running) {
                settle(std::move(inst));  // already live: idempotent
                continue;
            }
            if (inst.state == LifecycleState::Failed) inst.retried = false;  // manual redeploy
        } else {
            if (existing && existing->state == LifecycleState::Stopping)
                transition(*existing, LifecycleState::Stopped);
            // Fresh incarnation; a STOPPED record is terminal, redeploying the
            // same placement starts over under the same id.
            inst.instance_id = iid;
            inst.service_id = descriptor.service_id;
            inst.node_id = node;
            inst.deployment_id = deployment_id;
            inst.parent_instance = parent_instance;
            persist(inst);
            publish_lifecycle(inst, "");
        }
        drive_instance(std::move(inst), descriptor.launch_spec, settle);
    }
}

void ServiceManager::deploy_async(const std::string& service_id,
                                  const std::vector<std::string>& placement,
                                  const std::string& deployment_id, DeployCallback done) {
    deploy_impl(service(service_id), placement, deployment_id, "", std::move(done));
}

void ServiceManager::launch_subservice_async(const std::string& parent_instance_id,
                                             const ServiceDescriptor& child,
                                             const std::vector<std::string>& placement,
                                             DeployCallback done) {
    auto parent = status(parent_instance_id);
    if (parent.state != LifecycleState::Ready && parent.state != LifecycleState::Running)
        throw Error(Errc::parent_not_active,
                    parent_instance_id + " is " + lifecycle_state_name(parent.state),
                    Document{{"state", lifecycle_state_name(parent.state)}});
    if (!has_service(child.service_id)) register_service(child);
    deploy_impl(service(child.service_id), placement, parent.deployment_id, parent_instance_id,
                std::move(done));
}

LifecycleState ServiceManager::start(const std::string& instance_id) {
    auto inst = status(instance_id);
    if (!transition_legal(inst.state, LifecycleState::Running)) {
        throw Error(Errc::illegal_transition,
                    std::string(lifecycle_state_name(inst.state)) + " does not allow RUNNING",
                    Document{{"from", lifecycle_state_name(inst.state)}, {"requested", "RUNNING"}});
    }
    if (auto* logic = logic_for(inst.service_id)) logic->on_start(inst);
    return transition(std::move(inst), LifecycleState::Running).state;
}

LifecycleState ServiceManager::stop(const std::string& instance_id) {
    auto inst = status(instance_id);
    if (!transition_legal(inst.state, LifecycleState::Stopping)) {
        throw Error(Errc::illegal_transition,
                    std::string(lifecycle_state_name(inst.state)) + " does not allow STOPPING",
                    Document{{"from", lifecycle_state_name(inst.state)},
                             {"requested", "STOPPING"}});
    }

    // Live children go down first, depth-first through the launch forest.
    for (const auto& child : instances(inst.deployment_id)) {
        if (child.parent_instance != inst.instance_id) continue;
        if (child.state == LifecycleState::Ready || child.state == LifecycleState::Running)
            stop(child.instance_id);
    }

    inst = transition(std::move(inst), LifecycleState::Stopping);
    try {
        if (auto* logic = logic_for(inst.service_id)) logic->on_stop(inst);
        driver_.stop(inst);
    } catch (...) {
        transition(std::move(inst), LifecycleState::Failed);
        throw;
    }
    return transition(std::move(inst), LifecycleState::Stopped).state;
}

}  // namespace netsmo
