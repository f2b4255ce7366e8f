// SPDX-License-Identifier: Apache-2.0
#include "agent.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <utility>

#include <httplib.h>

namespace netsmo {

namespace {

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::string current;
    for (char c : path) {
        if (c == '/') {
            if (!current.empty()) out.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

int http_status(Errc code) {
    switch (code) {
    case Errc::duplicate_service:
    case Errc::version_conflict:
    case Errc::illegal_transition:
    case Errc::already_up:
    case Errc::address_in_use:
    case Errc::duplicate_consumer:
        return 409;
    case Errc::unknown_service:
    case Errc::unknown_node:
    case Errc::unknown_instance:
    case Errc::unknown_cloud:
    case Errc::unknown_target:
    case Errc::unknown_deployment:
    case Errc::not_found:
        return 404;
    case Errc::invalid_key:
    case Errc::parse_error:
    case Errc::validation_error:
    case Errc::bad_request:
    case Errc::invalid_descriptor:
    case Errc::precondition_failed:
    case Errc::too_few_members:
    case Errc::subnet_too_small:
    case Errc::no_server_candidate:
    case Errc::payload_too_large:
    case Errc::value_too_large:
        return 400;
    case Errc::timeout:
        return 408;
    default:
        return 500;
    }
}

ApiResponse ok_response(int status, Document data) {
    return {status, Document{{"ok", true}, {"data", std::move(data)}}};
}

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
    return {status,
            Document{{"ok", false}, {"error", Document{{"code", code}, {"message", message}}}}};
}

ApiResponse response_from(const Error& e) {
    Document err{{"code", e.code_name()}, {"message", e.what()}};
    if (!e.detail().empty()) err["detail"] = e.detail();
    return {http_status(e.code()), Document{{"ok", false}, {"error", std::move(err)}}};
}

Document endpoints_doc(const std::vector<Endpoint>& endpoints) {
    Document arr = Document::array();
    for (const auto& ep : endpoints)
        arr.push_back(Document{{"name", ep.name}, {"address", ep.address}, {"port", ep.port}});
    return arr;
}

constexpr Tick kApiReplyTimeout = 1;  // handlers reply inline on the request thread

}  // namespace

struct Agent::Listener {
    httplib::Server server;
    std::thread thread;
};

Agent::Agent(AgentConfig config) : config_(std::move(config)) {
    std::string image;
    if (!config_.store_path.empty()) {
        std::ifstream in(config_.store_path, std::ios::binary);
        if (in) image.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    if (image.empty())
        store_ = std::make_unique<StateStore>(clock_);
    else
        store_ = StateStore::restore(image, clock_);

    if (store_->get(StateKey::parse("sim/scenario")))
        harness_ = SimHarness::rehydrate(clock_, *store_, trace_);
    else
        harness_ = std::make_unique<SimHarness>(config_.scenario, clock_, *store_, trace_);

    bus_ = std::make_unique<MessageBus>(clock_);
    driver_ = std::make_unique<SimLaunchDriver>(*harness_);
    manager_ = std::make_unique<ServiceManager>(*store_, *bus_, *driver_);
    net_ = std::make_unique<NetServiceDeployer>(*store_, *manager_, *harness_);
    executor_ = std::make_unique<DeploymentExecutor>(*store_, *manager_, *net_, *harness_);
}

Agent::~Agent() {
    if (running_) {
        try {
            shutdown(false);
        } catch (...) {
            // nothing sane to do with a snapshot failure during teardown
        }
    }
}

std::unique_ptr<Agent> Agent::boot(AgentConfig config) {
    if (!config.sim_mode)
        throw Error(Errc::precondition_failed, "only simulation mode is implemented");
    std::unique_ptr<Agent> agent(new Agent(std::move(config)));
    agent->subscribe_handlers();
    agent->running_ = true;
    agent->resume_running_deployments();
    agent->start_listener();
    return agent;
}

void Agent::subscribe_handlers() {
    for (const std::string resource : {"services", "instances", "deployments"}) {
        bus_->subscribe("api/" + resource, std::string("core"), "agent." + resource,
                        [this](const Envelope& env) {
                            ApiRequest request;
                            request.method = env.payload.value("method", "");
                            request.path = env.payload.value("path", "");
                            request.body = env.payload.value("body", Document(Document::object()));
                            ApiResponse response;
                            try {
                                response = handle(request);
                            } catch (const Error& e) {
                                response = response_from(e);
                            } catch (const nlohmann::json::exception& e) {
                                response = error_response(400, "BAD_REQUEST", e.what());
                            } catch (const std::exception& e) {
                                response = error_response(500, "INTERNAL", e.what());
                            }
                            bus_->reply_to(env,
                                           Document{{"status", response.status},
                                                    {"body", response.body}},
                                           "core");
                        });
    }
}

void Agent::resume_running_deployments() {
    std::vector<std::string> running;
    for (const auto& entry : store_->list(StateKey::parse("deploy"))) {
        const auto& segs = entry.key.segments();
        if (segs.size() != 3 || segs[2] != "status") continue;
        auto doc = Document::parse(entry.value, nullptr, false);
        if (!doc.is_discarded() && doc.value("state", "") == "RUNNING") running.push_back(segs[1]);
    }
    if (running.empty()) return;

    // One shared restart: per-deployment restarts would collide once the first
    // resume has events queued.
    Tick last = 0;
    for (const auto& dep : running) {
        auto prefix = StateKey::parse("deploy").child(dep).child("steps");
        for (const auto& entry : store_->list(prefix)) {
            auto doc = Document::parse(entry.value, nullptr, false);
            if (!doc.is_discarded()) last = std::max(last, doc.value("end", Tick{0}));
        }
    }
    if (clock_.now() < last) clock_.restart_at(last);
    for (const auto& dep : running)
        executor_->resume_async(dep, [](const DeploymentReport&) {});
    clock_.run_until_idle();
}

void Agent::start_listener() {
    if (config_.listen_address.empty()) return;
    auto pos = config_.listen_address.rfind(':');
    int port = 0;
    if (pos != std::string::npos) {
        try {
            port = std::stoi(config_.listen_address.substr(pos + 1));
        } catch (...) {
            pos = std::string::npos;
        }
    }
    if (pos == std::string::npos || port <= 0 || port > 65535)
        throw Error(Errc::bad_request, "listen_address must be host:port",
                    Document{{"listen_address", config_.listen_address}});
    const std::string host = config_.listen_address.substr(0, pos);

    auto listener = std::make_unique<Listener>();
    // Default options include SO_REUSEPORT, which would let a second agent
    // bind the same port instead of failing.
    listener->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes),
                   sizeof(yes));
    });
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        Document body = Document::object();
        ApiResponse response;
        if (!req.body.empty() &&
            (body = Document::parse(req.body, nullptr, false)).is_discarded()) {
            response = error_response(400, "PARSE_ERROR", "request body is not a document");
        } else {
            response = dispatch(ApiRequest{req.method, req.path, std::move(body)});
        }
        res.status = response.status;
        res.set_content(response.body.dump(), "application/json");
    };
    listener->server.Get(".*", route);
    listener->server.Post(".*", route);
    listener->server.Put(".*", route);
    listener->server.Delete(".*", route);
    if (!listener->server.bind_to_port(host, port))
        throw Error(Errc::address_in_use, "cannot bind " + config_.listen_address,
                    Document{{"listen_address", config_.listen_address}});
    listener->thread = std::thread([srv = &listener->server] { srv->listen_after_bind(); });
    listener->server.wait_until_ready();
    listener_ = std::move(listener);
}

ApiResponse Agent::dispatch(const ApiRequest& request) {
    std::lock_guard<std::mutex> lock(dispatch_mu_);
    try {
        if (!running_) throw Error(Errc::precondition_failed, "agent is not running");
        auto segments = split_path(request.path);
        if (segments.size() < 2 || segments[0] != "v1" ||
            (segments[1] != "services" && segments[1] != "instances" &&
             segments[1] != "deployments"))
            throw Error(Errc::not_found, "no route for " + request.method + " " + request.path);
        Envelope reply = bus_->request(
            "api/" + segments[1],
            Document{{"method", request.method}, {"path", request.path}, {"body", request.body}},
            kApiReplyTimeout, "northbound");
        return {reply.payload.at("status").get<int>(), reply.payload.at("body")};
    } catch (const Error& e) {
        return response_from(e);
    } catch (const std::exception& e) {
        return error_response(500, "INTERNAL", e.what());
    }
}

ApiResponse Agent::handle(const ApiRequest& request) {
    auto segments = split_path(request.path);
    if (segments.size() >= 2 && segments[0] == "v1") {
        if (segments[1] == "services") return handle_services(request, segments);
        if (segments[1] == "instances") return handle_instances(request, segments);
        if (segments[1] == "deployments") return handle_deployments(request, segments);
    }
    throw Error(Errc::not_found, "no route for " + request.method + " " + request.path);
}

ApiResponse Agent::handle_services(const ApiRequest& request,
                                   const std::vector<std::string>& segments) {
    if (segments.size() == 2 && request.method == "GET") {
        Document arr = Document::array();
        for (const auto& descriptor : manager_->services()) arr.push_back(descriptor.to_document());
        return ok_response(200, std::move(arr));
    }
    if (segments.size() == 2 && request.method == "POST") {
        auto descriptor = ServiceDescriptor::from_document(request.body);
        auto service_id = manager_->register_service(descriptor);
        return ok_response(201, Document{{"service_id", service_id}});
    }
    if (segments.size() == 4 && segments[3] == "deploy" && request.method == "POST") {
        const auto& nodes_doc = request.body.at("nodes");
        if (!nodes_doc.is_array())
            throw Error(Errc::bad_request, "nodes must be an array of node ids");
        std::vector<std::string> nodes;
        for (const auto& node : nodes_doc) nodes.push_back(node.get<std::string>());
        auto deployment = request.body.value("deployment_id", "default");
        std::optional<std::vector<ServiceInstance>> settled;
        manager_->deploy_async(segments[2], nodes, deployment,
                               [&](const std::vector<ServiceInstance>& v) { settled = v; });
        clock_.run_until_idle();
        if (!settled) throw Error(Errc::internal, "deploy did not settle");
        Document arr = Document::array();
        for (const auto& instance : *settled) arr.push_back(instance.to_document());
        return ok_response(202, Document{{"instances", std::move(arr)}});
    }
    throw Error(Errc::not_found, "no route for " + request.method + " " + request.path);
}

ApiResponse Agent::handle_instances(const ApiRequest& request,
                                    const std::vector<std::string>& segments) {
    if (segments.size() == 3 && request.method == "GET") {
        auto instance = manager_->status(segments[2]);
        return ok_response(200, Document{{"state", lifecycle_state_name(instance.state)},
                                         {"endpoints", endpoints_doc(instance.endpoints)}});
    }
    if (segments.size() == 4 && request.method == "POST") {
        if (segments[3] == "start") {
            auto state = manager_->start(segments[2]);
            return ok_response(200, Document{{"state", lifecycle_state_name(state)}});
        }
        if (segments[3] == "stop") {
            auto state = manager_->stop(segments[2]);
            return ok_response(200, Document{{"state", lifecycle_state_name(state)}});
        }
    }
    throw Error(Errc::not_found, "no route for " + request.method + " " + request.path);
}

ApiResponse Agent::handle_deployments(const ApiRequest& request,
                                      const std::vector<std::string>& segments) {
    if (segments.size() == 2 && request.method == "POST") {
        auto recipe = parse_recipe(request.body);
        executor_->execute_async(recipe, [](const DeploymentReport&) {});
        clock_.run_until_idle();
        return ok_response(202, Document{{"deployment_id", recipe.deployment_id}});
    }
    if (segments.size() == 3 && request.method == "GET") {
        const auto& deployment = segments[2];
        auto plan_entry = store_->get(plan_key(deployment));
        if (!plan_entry)
            throw Error(Errc::unknown_deployment, "no deployment " + deployment,
                        Document{{"deployment_id", deployment}});
        Document steps = Document::array();
        auto prefix = StateKey::parse("deploy").child(deployment).child("steps");
        for (const auto& entry : store_->list(prefix)) steps.push_back(Document::parse(entry.value));
        Document data{{"plan", Document::parse(plan_entry->value)}, {"steps", std::move(steps)}};
        if (auto status = store_->get(deployment_status_key(deployment)))
            data["status"] = Document::parse(status->value);
        if (auto report = store_->get(report_key(deployment)))
            data["report"] = Document::parse(report->value);
        return ok_response(200, std::move(data));
    }
    if (segments.size() == 4 && segments[3] == "vpn" && request.method == "GET") {
        auto entry = store_->get(overlay_key(segments[2]));
        if (!entry)
            throw Error(Errc::not_found, "no overlay for deployment " + segments[2],
                        Document{{"deployment_id", segments[2]}});
        return ok_response(200, Document::parse(entry->value));
    }
    throw Error(Errc::not_found, "no route for " + request.method + " " + request.path);
}

void Agent::shutdown(bool drain) {
    // Stop intake before taking the lock: an in-flight request holds it.
    if (listener_) {
        listener_->server.stop();
        if (listener_->thread.joinable()) listener_->thread.join();
    }
    std::lock_guard<std::mutex> lock(dispatch_mu_);
    listener_.reset();
    if (!running_) throw Error(Errc::precondition_failed, "agent already shut down");
    if (drain) clock_.run_until_idle();
    running_ = false;
    if (config_.store_path.empty()) return;

    const std::string image = store_->snapshot();
    const std::string tmp = config_.store_path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(image.data(), static_cast<std::streamsize>(image.size()));
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw Error(Errc::snapshot_write_failure,
                        "cannot write snapshot to " + config_.store_path);
        }
    }
    if (std::rename(tmp.c_str(), config_.store_path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw Error(Errc::snapshot_write_failure,
                    "cannot replace snapshot at " + config_.store_path);
    }
}

}  // namespace netsmo
