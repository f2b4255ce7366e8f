// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "executor.hpp"
#include "message_bus.hpp"
#include "net_services.hpp"
#include "service_framework.hpp"
#include "sim_harness.hpp"
#include "state_store.hpp"
#include "trace.hpp"

namespace netsmo {

struct AgentConfig {
    std::string listen_address;  // "host:port"; empty disables the northbound listener
    std::string store_path;      // snapshot file; empty keeps state in memory only
    bool sim_mode = true;
    ScenarioSpec scenario;  // world config, used unless a snapshot already carries one
};

struct ApiRequest {
    std::string method;  // GET | POST | ...
    std::string path;    // "/v1/..."
    Document body = Document::object();
};

struct ApiResponse {
    int status = 0;
    Document body;  // {"ok":true,"data":...} or {"ok":false,"error":{code,message}}
};

/// Single management entry point. Owns the whole stack (clock, store, bus,
/// harness, service manager, deployer, executor); every northbound request is
/// routed over the bus as a REQUEST envelope on `api/<resource>` and answered
/// by the owning handler. Boot restores the previous snapshot when one exists
/// and resumes any deployment that was still running.
class Agent {
public:
    static std::unique_ptr<Agent> boot(AgentConfig config);
    ~Agent();

    Agent(const Agent&) = delete;
    Agent& operator=(const Agent&) = delete;

    /// Total: malformed or unroutable requests come back as error responses,
    /// never as exceptions. Safe to call from any thread.
    ApiResponse dispatch(const ApiRequest& request);

    /// Stops the listener, optionally runs the world to idle so in-flight
    /// deployments settle, then writes the final snapshot.
    /// Throws Error{snapshot_write_failure} when the store path is unwritable.
    void shutdown(bool drain);

    bool running() const { return running_; }

    // Direct handles for embedding (CLI, tests). Calls that mutate the world
    // must come from one thread at a time, same as dispatch.
    SimClock& clock() { return clock_; }
    StateStore& store() { return *store_; }
    SimHarness& harness() { return *harness_; }
    ServiceManager& manager() { return *manager_; }
    DeploymentExecutor& executor() { return *executor_; }
    const AgentConfig& config() const { return config_; }

private:
    explicit Agent(AgentConfig config);

    void subscribe_handlers();
    void resume_running_deployments();
    void start_listener();
    ApiResponse handle(const ApiRequest& request);
    ApiResponse handle_services(const ApiRequest& request,
                                const std::vector<std::string>& segments);
    ApiResponse handle_instances(const ApiRequest& request,
                                 const std::vector<std::string>& segments);
    ApiResponse handle_deployments(const ApiRequest& request,
                                   const std::vector<std::string>& segments);

    AgentConfig config_;
    SimClock clock_;
    std::unique_ptr<StateStore> store_;
    TraceLog trace_;
    std::unique_ptr<SimHarness> harness_;
    std::unique_ptr<MessageBus> bus_;
    std::unique_ptr<SimLaunchDriver> driver_;
    std::unique_ptr<ServiceManager> manager_;
    std::unique_ptr<NetServiceDeployer> net_;
    std::unique_ptr<DeploymentExecutor> executor_;

    std::mutex dispatch_mu_;
    bool running_ = false;

    struct Listener;
    std::unique_ptr<Listener> listener_;
};

}  // namespace netsmo
