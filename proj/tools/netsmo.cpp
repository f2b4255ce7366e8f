// SPDX-License-Identifier: Apache-2.0
//
// Operator front end: deploy recipes, inspect deployments, show VPN configs,
// list services, run overhead benchmarks, or serve the northbound API.
// Commands run either against an embedded engine (--scenario/--store) or a
// live agent (--api, or the NETSMO_API environment variable).

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <netsmo/netsmo.h>

namespace {

using Document = nlohmann::json;

constexpr const char* kDefaultApi = "127.0.0.1:7474";
constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitInternal = 2;

struct CliError {
    int exit_code;
    Document error;  // {"code","message"[,"detail"]}
};

CliError user_error(const std::string& code, const std::string& message) {
    return {kExitUserError, Document{{"code", code}, {"message", message}}};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw user_error("FILE_UNREADABLE", "cannot read " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Document parse_file(const std::string& path) {
    Document doc = Document::parse(read_file(path), nullptr, false);
    if (doc.is_discarded())
        throw user_error("PARSE_ERROR", path + " is not a well-formed document");
    return doc;
}

int exit_code_for(nsmo_status status) {
    return status == NSMO_ERR_INTERNAL ? kExitInternal : kExitUserError;
}

Document take_last_error() {
    const char* raw = nsmo_last_error();
    if (raw == nullptr) return Document{{"code", "INTERNAL"}, {"message", "unknown failure"}};
    return Document::parse(raw, nullptr, false);
}

/// Owns either an embedded engine or a remote HTTP connection; `call` returns
/// the northbound status code and response body on both paths.
class Backend {
public:
    static Backend embedded(const std::optional<std::string>& scenario_path,
                            const std::string& store_path) {
        Document config = Document::object();
        if (scenario_path) config["scenario"] = parse_file(*scenario_path);
        if (!store_path.empty()) config["store_path"] = store_path;
        Backend backend;
        nsmo_status status = nsmo_engine_create(config.dump().c_str(), &backend.engine_);
        if (status != NSMO_OK) throw CliError{exit_code_for(status), take_last_error()};
        backend.store_path_ = store_path;
        return backend;
    }

    static Backend remote(const std::string& address) {
        auto pos = address.rfind(':');
        int port = 0;
        if (pos != std::string::npos) {
            try {
                port = std::stoi(address.substr(pos + 1));
            } catch (...) {
                pos = std::string::npos;
            }
        }
        if (pos == std::string::npos || port <= 0)
            throw user_error("BAD_ADDRESS", "agent address must be host:port: " + address);
        Backend backend;
        backend.client_ = std::make_unique<httplib::Client>(address.substr(0, pos), port);
        backend.client_->set_connection_timeout(5);
        backend.address_ = address;
        return backend;
    }

    Backend(Backend&& other) noexcept
        : engine_(other.engine_),
          store_path_(std::move(other.store_path_)),
          client_(std::move(other.client_)),
          address_(std::move(other.address_)) {
        other.engine_ = nullptr;
    }
    Backend(const Backend&) = delete;

    ~Backend() {
        if (engine_ != nullptr) {
            if (!store_path_.empty()) nsmo_engine_shutdown(engine_, 1);
            nsmo_engine_destroy(engine_);
        }
    }

    std::pair<int, Document> call(const std::string& method, const std::string& path,
                                  const Document& body = Document()) {
        if (engine_ != nullptr) {
            char* response = nullptr;
            nsmo_status status = nsmo_engine_dispatch(
                engine_, method.c_str(), path.c_str(),
                body.is_null() ? nullptr : body.dump().c_str(), &response);
            if (status != NSMO_OK) throw CliError{exit_code_for(status), take_last_error()};
            Document doc = Document::parse(response);
            nsmo_string_free(response);
            return {doc.at("status").get<int>(), doc.at("body")};
        }
        httplib::Result result;
        if (method == "GET")
            result = client_->Get(path);
        else
            result = client_->Post(path, body.is_null() ? "" : body.dump(), "application/json");
        if (!result)
            throw user_error("AGENT_UNREACHABLE", "cannot reach agent at " + address_);
        Document doc = Document::parse(result->body, nullptr, false);
        if (doc.is_discarded())
            throw CliError{kExitInternal, Document{{"code", "BAD_RESPONSE"},
                                                   {"message", "agent sent a non-document body"}}};
        return {result->status, doc};
    }

    nsmo_engine* engine() { return engine_; }

private:
    Backend() = default;

    nsmo_engine* engine_ = nullptr;
    std::string store_path_;
    std::unique_ptr<httplib::Client> client_;
    std::string address_;
};

struct CommonFlags {
    std::string scenario_path;
    std::string store_path;
    std::string api_address;
    bool json = false;
};

void add_backend_flags(CLI::App* cmd, CommonFlags& flags, bool with_scenario = true) {
    if (with_scenario)
        cmd->add_option("--scenario", flags.scenario_path, "world scenario file (embedded mode)");
    cmd->add_option("--store", flags.store_path, "snapshot file (embedded mode)");
    cmd->add_option("--api", flags.api_address, "live agent address host:port");
    cmd->add_flag("--json", flags.json, "machine output: one JSON document on stdout");
}

Backend open_backend(const CommonFlags& flags) {
    if (!flags.api_address.empty()) return Backend::remote(flags.api_address);
    if (!flags.scenario_path.empty() || !flags.store_path.empty()) {
        std::optional<std::string> scenario;
        if (!flags.scenario_path.empty()) scenario = flags.scenario_path;
        return Backend::embedded(scenario, flags.store_path);
    }
    const char* env = std::getenv("NETSMO_API");
    return Backend::remote(env != nullptr && *env != '\0' ? env : kDefaultApi);
}

void emit_json(const Document& doc) { std::cout << doc.dump(2) << "\n"; }

[[noreturn]] void fail_with(int status, const Document& body) {
    Document error = body.is_object() && body.contains("error")
                         ? body.at("error")
                         : Document{{"code", "INTERNAL"}, {"message", body.dump()}};
    throw CliError{status >= 500 ? kExitInternal : kExitUserError, error};
}

Document expect_data(std::pair<int, Document> response) {
    if (response.first >= 400 || response.second.value("ok", false) != true)
        fail_with(response.first, response.second);
    return response.second.at("data");
}

// ---- deploy ----------------------------------------------------------------

int cmd_deploy(const std::string& recipe_path, const CommonFlags& flags) {
    Document recipe = parse_file(recipe_path);
    Backend backend = open_backend(flags);
    auto accepted = expect_data(backend.call("POST", "/v1/deployments", recipe));
    const std::string deployment_id = accepted.at("deployment_id").get<std::string>();
    auto shown = expect_data(backend.call("GET", "/v1/deployments/" + deployment_id));
    Document report = shown.value("report", Document::object());

    if (flags.json) {
        emit_json(Document{{"deployment_id", deployment_id}, {"report", report}});
        return report.value("status", "") == "DONE" ? kExitOk : kExitUserError;
    }
    const std::string status = report.value("status", "UNKNOWN");
    std::printf("deployment %s: %s, %llu ticks total\n", deployment_id.c_str(), status.c_str(),
                static_cast<unsigned long long>(report.value("total_duration", 0ull)));
    for (const auto& step : report.value("steps", Document::array())) {
        if (step.value("outcome", "") == "DONE") continue;
        std::printf("  %-28s %s %s\n", step.value("step_id", "").c_str(),
                    step.value("outcome", "").c_str(),
                    step.value("error", Document::object()).value("code", "").c_str());
    }
    if (report.contains("critical_path")) {
        std::printf("critical path:");
        for (const auto& step : report.at("critical_path"))
            std::printf(" %s", step.get<std::string>().c_str());
        std::printf("\n");
    }
    return status == "DONE" ? kExitOk : kExitUserError;
}

// ---- status ----------------------------------------------------------------

int cmd_status(const std::string& deployment_id, const CommonFlags& flags) {
    Backend backend = open_backend(flags);
    auto data = expect_data(backend.call("GET", "/v1/deployments/" + deployment_id));
    if (flags.json) {
        emit_json(data);
        return kExitOk;
    }
    std::printf("deployment %s: %s\n", deployment_id.c_str(),
                data.value("status", Document::object()).value("state", "UNKNOWN").c_str());
    std::printf("%-28s %-22s %-8s %6s %6s\n", "STEP", "KIND", "OUTCOME", "START", "END");
    for (const auto& step : data.value("steps", Document::array())) {
        std::printf("%-28s %-22s %-8s %6llu %6llu\n", step.value("step_id", "").c_str(),
                    step.value("kind", "").c_str(), step.value("outcome", "").c_str(),
                    static_cast<unsigned long long>(step.value("start", 0ull)),
                    static_cast<unsigned long long>(step.value("end", 0ull)));
    }
    return kExitOk;
}

// ---- vpn -------------------------------------------------------------------

int cmd_vpn(const std::string& deployment_id, const CommonFlags& flags) {
    Backend backend = open_backend(flags);
    auto overlay = expect_data(backend.call("GET", "/v1/deployments/" + deployment_id + "/vpn"));
    if (flags.json) {
        emit_json(overlay);
        return kExitOk;
    }
    const auto endpoint = overlay.value("server_endpoint", Document::object());
    std::printf("network %s  subnet %s  server %s:%d\n",
                overlay.value("network_id", "").c_str(), overlay.value("subnet", "").c_str(),
                endpoint.value("address", "").c_str(), endpoint.value("port", 0));
    std::printf("%-8s %-16s %s\n", "ROLE", "NODE", "OVERLAY");
    const auto members = overlay.value("members", Document::array());
    auto print_member = [](const Document& member) {
        std::printf("%-8s %-16s %s\n", member.value("role", "").c_str(),
                    member.value("node_id", "").c_str(),
                    member.value("overlay_address", "").c_str());
    };
    for (const auto& member : members)
        if (member.value("role", "") == "SERVER") print_member(member);
    for (const auto& member : members)
        if (member.value("role", "") != "SERVER") print_member(member);
    return kExitOk;
}

// ---- services --------------------------------------------------------------

int cmd_services(const CommonFlags& flags) {
    Backend backend = open_backend(flags);
    auto services = expect_data(backend.call("GET", "/v1/services"));
    if (flags.json) {
        emit_json(services);
        return kExitOk;
    }
    std::printf("%-20s %-14s %s\n", "SERVICE", "TYPE", "VERSION");
    for (const auto& service : services)
        std::printf("%-20s %-14s %s\n", service.value("service_id", "").c_str(),
                    service.value("service_type", "").c_str(), service.value("version", "").c_str());
    return kExitOk;
}

// ---- bench -----------------------------------------------------------------

int cmd_bench(const std::string& recipe_path, const std::string& scenario_path, int repeat,
              bool json) {
    Document recipe = parse_file(recipe_path);
    Document scenario = parse_file(scenario_path);
    Document runs = Document::array();
    unsigned long long total = 0;
    unsigned long long max_overhead = 0;

    for (int seed = 1; seed <= repeat; ++seed) {
        scenario["seed"] = seed;
        Document config{{"scenario", scenario}};
        nsmo_engine* engine = nullptr;
        nsmo_status status = nsmo_engine_create(config.dump().c_str(), &engine);
        if (status != NSMO_OK) throw CliError{exit_code_for(status), take_last_error()};
        char* out = nullptr;
        status = nsmo_engine_measure_overhead(engine, recipe.dump().c_str(), &out);
        nsmo_engine_destroy(engine);
        if (status != NSMO_OK) throw CliError{exit_code_for(status), take_last_error()};
        Document report = Document::parse(out);
        nsmo_string_free(out);

        const auto overhead = report.at("overhead").get<unsigned long long>();
        total += overhead;
        max_overhead = std::max(max_overhead, overhead);
        runs.push_back(Document{
            {"seed", seed},
            {"baseline", report.at("baseline").at("total_duration")},
            {"with_services", report.at("with_services").at("total_duration")},
            {"overhead", overhead}});
    }
    const double mean = repeat > 0 ? static_cast<double>(total) / repeat : 0.0;

    if (json) {
        emit_json(Document{{"runs", runs}, {"mean_overhead", mean}, {"max_overhead", max_overhead}});
        return kExitOk;
    }
    std::printf("%6s %10s %15s %10s\n", "SEED", "BASELINE", "WITH-SERVICES", "OVERHEAD");
    for (const auto& run : runs)
        std::printf("%6d %10llu %15llu %10llu\n", run.at("seed").get<int>(),
                    run.at("baseline").get<unsigned long long>(),
                    run.at("with_services").get<unsigned long long>(),
                    run.at("overhead").get<unsigned long long>());
    std::printf("mean overhead %.2f ticks, max %llu ticks over %d seed(s)\n", mean, max_overhead,
                repeat);
    return kExitOk;
}

// ---- serve -----------------------------------------------------------------

volatile std::sig_atomic_t g_stop = 0;
void handle_stop(int) { g_stop = 1; }

int cmd_serve(const std::string& scenario_path, const std::string& store_path,
              const std::string& listen_address) {
    Document config = Document::object();
    if (!scenario_path.empty()) config["scenario"] = parse_file(scenario_path);
    if (!store_path.empty()) config["store_path"] = store_path;
    config["listen_address"] = listen_address;

    nsmo_engine* engine = nullptr;
    nsmo_status status = nsmo_engine_create(config.dump().c_str(), &engine);
    if (status != NSMO_OK) throw CliError{exit_code_for(status), take_last_error()};

    std::signal(SIGINT, handle_stop);
    std::signal(SIGTERM, handle_stop);
    std::fprintf(stderr, "netsmo agent listening on %s\n", listen_address.c_str());
    while (g_stop == 0) {
        struct timespec req = {0, 50 * 1000 * 1000};
        nanosleep(&req, nullptr);
    }
    status = nsmo_engine_shutdown(engine, 1);
    nsmo_engine_destroy(engine);
    if (status != NSMO_OK) throw CliError{exit_code_for(status), take_last_error()};
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netsmo: network-services manager for federated multi-cloud deployments"};
    app.require_subcommand(1);

    CommonFlags deploy_flags, status_flags, vpn_flags, services_flags;
    std::string recipe_path, deployment_id;

    auto* deploy = app.add_subcommand("deploy", "run a deployment recipe to completion");
    deploy->add_option("recipe", recipe_path, "recipe file")->required();
    add_backend_flags(deploy, deploy_flags);

    auto* status_cmd = app.add_subcommand("status", "show a deployment's step outcomes");
    status_cmd->add_option("deployment_id", deployment_id, "deployment id")->required();
    add_backend_flags(status_cmd, status_flags);

    auto* vpn = app.add_subcommand("vpn", "show a deployment's overlay network");
    vpn->add_option("deployment_id", deployment_id, "deployment id")->required();
    add_backend_flags(vpn, vpn_flags);

    auto* services = app.add_subcommand("services", "list registered services");
    add_backend_flags(services, services_flags);

    std::string bench_scenario;
    int bench_repeat = 1;
    bool bench_json = false;
    auto* bench = app.add_subcommand("bench", "measure network-service bootstrap overhead");
    bench->add_option("recipe", recipe_path, "recipe file")->required();
    bench->add_option("--scenario", bench_scenario, "world scenario file")->required();
    bench->add_option("--repeat", bench_repeat, "seeds 1..N")->check(CLI::PositiveNumber);
    bench->add_flag("--json", bench_json, "machine output");

    std::string serve_scenario, serve_store, serve_listen = kDefaultApi;
    auto* serve = app.add_subcommand("serve", "run the agent until SIGINT/SIGTERM");
    serve->add_option("--scenario", serve_scenario, "world scenario file");
    serve->add_option("--store", serve_store, "snapshot file");
    serve->add_option("--listen", serve_listen, "listen address host:port");

    try {
        app.parse(argc, argv);
        if (deploy->parsed()) return cmd_deploy(recipe_path, deploy_flags);
        if (status_cmd->parsed()) return cmd_status(deployment_id, status_flags);
        if (vpn->parsed()) return cmd_vpn(deployment_id, vpn_flags);
        if (services->parsed()) return cmd_services(services_flags);
        if (bench->parsed()) return cmd_bench(recipe_path, bench_scenario, bench_repeat, bench_json);
        if (serve->parsed()) return cmd_serve(serve_scenario, serve_store, serve_listen);
        return kExitUserError;
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        app.exit(e);
        return kExitUserError;
    } catch (const CliError& e) {
        bool json = deploy_flags.json || status_flags.json || vpn_flags.json ||
                    services_flags.json || bench_json;
        if (json) {
            emit_json(Document{{"ok", false}, {"error", e.error}});
        } else {
            std::fprintf(stderr, "error: %s (%s)\n",
                         e.error.value("message", "unknown").c_str(),
                         e.error.value("code", "?").c_str());
            if (e.error.contains("detail") && e.error.at("detail").contains("violations"))
                for (const auto& violation : e.error.at("detail").at("violations"))
                    std::fprintf(stderr, "  violation: %s\n", violation.dump().c_str());
        }
        return e.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInternal;
    }
}
