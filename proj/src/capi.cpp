// SPDX-License-Identifier: Apache-2.0
#include <netsmo/netsmo.h>

#include <cstdlib>
#include <cstring>
#include <string>

#include "agent.hpp"

using namespace netsmo;

struct nsmo_engine {
    std::unique_ptr<Agent> agent;
};

namespace {

thread_local std::string g_last_error;

nsmo_status status_of(Errc code) {
    switch (code) {
    case Errc::parse_error:
        return NSMO_ERR_PARSE;
    case Errc::validation_error:
    case Errc::invalid_descriptor:
    case Errc::invalid_key:
    case Errc::bad_request:
    case Errc::precondition_failed:
    case Errc::too_few_members:
    case Errc::subnet_too_small:
    case Errc::no_server_candidate:
    case Errc::payload_too_large:
    case Errc::value_too_large:
        return NSMO_ERR_VALIDATION;
    case Errc::not_found:
    case Errc::unknown_service:
    case Errc::unknown_node:
    case Errc::unknown_instance:
    case Errc::unknown_cloud:
    case Errc::unknown_target:
    case Errc::unknown_deployment:
        return NSMO_ERR_NOT_FOUND;
    case Errc::duplicate_service:
    case Errc::duplicate_consumer:
    case Errc::version_conflict:
    case Errc::illegal_transition:
    case Errc::already_up:
    case Errc::address_in_use:
        return NSMO_ERR_CONFLICT;
    case Errc::timeout:
        return NSMO_ERR_TIMEOUT;
    case Errc::corrupt_image:
    case Errc::snapshot_write_failure:
        return NSMO_ERR_IO;
    default:
        return NSMO_ERR_INTERNAL;
    }
}

nsmo_status fail(nsmo_status status, const std::string& code, const std::string& message) {
    g_last_error = Document{{"code", code}, {"message", message}}.dump();
    return status;
}

nsmo_status fail(const Error& e) { return fail(status_of(e.code()), e.code_name(), e.what()); }

char* copy_out(const std::string& value) {
    char* out = static_cast<char*>(std::malloc(value.size() + 1));
    if (out != nullptr) std::memcpy(out, value.c_str(), value.size() + 1);
    return out;
}

nsmo_status write_out(char** slot, const std::string& value) {
    *slot = copy_out(value);
    if (*slot == nullptr) return fail(NSMO_ERR_INTERNAL, "OOM", "allocation failed");
    return NSMO_OK;
}

template <typename Fn>
nsmo_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        return fail(e);
    } catch (const nlohmann::json::exception& e) {
        return fail(NSMO_ERR_PARSE, "PARSE_ERROR", e.what());
    } catch (const std::exception& e) {
        return fail(NSMO_ERR_INTERNAL, "INTERNAL", e.what());
    }
}

}  // namespace

extern "C" {

const char* nsmo_version(void) { return "0.1.0"; }

const char* nsmo_status_name(nsmo_status status) {
    switch (status) {
    case NSMO_OK:
        return "NSMO_OK";
    case NSMO_ERR_INVALID_ARG:
        return "NSMO_ERR_INVALID_ARG";
    case NSMO_ERR_PARSE:
        return "NSMO_ERR_PARSE";
    case NSMO_ERR_VALIDATION:
        return "NSMO_ERR_VALIDATION";
    case NSMO_ERR_NOT_FOUND:
        return "NSMO_ERR_NOT_FOUND";
    case NSMO_ERR_CONFLICT:
        return "NSMO_ERR_CONFLICT";
    case NSMO_ERR_TIMEOUT:
        return "NSMO_ERR_TIMEOUT";
    case NSMO_ERR_IO:
        return "NSMO_ERR_IO";
    case NSMO_ERR_INTERNAL:
        return "NSMO_ERR_INTERNAL";
    }
    return "NSMO_ERR_INTERNAL";
}

nsmo_status nsmo_engine_create(const char* config_json, nsmo_engine** out_engine) {
    if (out_engine == nullptr)
        return fail(NSMO_ERR_INVALID_ARG, "INVALID_ARG", "out_engine is null");
    *out_engine = nullptr;
    return guarded([&] {
        AgentConfig config;
        if (config_json != nullptr && *config_json != '\0') {
            Document doc = Document::parse(config_json, nullptr, false);
            if (doc.is_discarded() || !doc.is_object())
                return fail(NSMO_ERR_PARSE, "PARSE_ERROR", "config is not a document");
            if (doc.contains("scenario"))
                config.scenario = ScenarioSpec::from_document(doc.at("scenario"));
            config.store_path = doc.value("store_path", "");
            config.listen_address = doc.value("listen_address", "");
            config.sim_mode = doc.value("sim_mode", true);
        }
        auto engine = new nsmo_engine{Agent::boot(std::move(config))};
        *out_engine = engine;
        return NSMO_OK;
    });
}

void nsmo_engine_destroy(nsmo_engine* engine) { delete engine; }

nsmo_status nsmo_engine_dispatch(nsmo_engine* engine, const char* method, const char* path,
                                 const char* body_json, char** out_response_json) {
    if (engine == nullptr || method == nullptr || path == nullptr ||
        out_response_json == nullptr)
        return fail(NSMO_ERR_INVALID_ARG, "INVALID_ARG", "null argument");
    *out_response_json = nullptr;
    return guarded([&] {
        Document body = Document::object();
        if (body_json != nullptr && *body_json != '\0') {
            body = Document::parse(body_json, nullptr, false);
            if (body.is_discarded())
                return fail(NSMO_ERR_PARSE, "PARSE_ERROR", "body is not a document");
        }
        auto response = engine->agent->dispatch(ApiRequest{method, path, std::move(body)});
        return write_out(out_response_json,
                         Document{{"status", response.status}, {"body", response.body}}.dump());
    });
}

nsmo_status nsmo_engine_measure_overhead(nsmo_engine* engine, const char* recipe_json,
                                         char** out_report_json) {
    if (engine == nullptr || recipe_json == nullptr || out_report_json == nullptr)
        return fail(NSMO_ERR_INVALID_ARG, "INVALID_ARG", "null argument");
    *out_report_json = nullptr;
    return guarded([&] {
        Document doc = Document::parse(recipe_json, nullptr, false);
        if (doc.is_discarded())
            return fail(NSMO_ERR_PARSE, "PARSE_ERROR", "recipe is not a document");
        auto recipe = parse_recipe(doc);
        auto report =
            DeploymentExecutor::measure_overhead(recipe, engine->agent->config().scenario);
        return write_out(out_report_json, report.to_document().dump());
    });
}

nsmo_status nsmo_engine_export_trace(nsmo_engine* engine, char** out_ndjson) {
    if (engine == nullptr || out_ndjson == nullptr)
        return fail(NSMO_ERR_INVALID_ARG, "INVALID_ARG", "null argument");
    *out_ndjson = nullptr;
    return guarded([&] { return write_out(out_ndjson, engine->agent->harness().trace().ndjson()); });
}

nsmo_status nsmo_engine_shutdown(nsmo_engine* engine, int drain) {
    if (engine == nullptr) return fail(NSMO_ERR_INVALID_ARG, "INVALID_ARG", "engine is null");
    return guarded([&] {
        engine->agent->shutdown(drain != 0);
        return NSMO_OK;
    });
}

void nsmo_string_free(char* str) { std::free(str); }

const char* nsmo_last_error(void) {
    return g_last_error.empty() ? nullptr : g_last_error.c_str();
}

}  // extern "C"
