// SPDX-License-Identifier: Apache-2.0
#include "errors.hpp"

namespace netsmo {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::invalid_key: return "INVALID_KEY";
        case Errc::version_conflict: return "VERSION_CONFLICT";
        case Errc::value_too_large: return "VALUE_TOO_LARGE";
        case Errc::timeout: return "TIMEOUT";
        case Errc::subscription_closed: return "SUBSCRIPTION_CLOSED";
        case Errc::corrupt_image: return "CORRUPT_IMAGE";
        case Errc::payload_too_large: return "PAYLOAD_TOO_LARGE";
        case Errc::bus_closed: return "BUS_CLOSED";
        case Errc::duplicate_consumer: return "DUPLICATE_CONSUMER";
        case Errc::duplicate_service: return "DUPLICATE_SERVICE";
        case Errc::invalid_descriptor: return "INVALID_DESCRIPTOR";
        case Errc::unknown_service: return "UNKNOWN_SERVICE";
        case Errc::unknown_node: return "UNKNOWN_NODE";
        case Errc::launch_failure: return "LAUNCH_FAILURE";
        case Errc::illegal_transition: return "ILLEGAL_TRANSITION";
        case Errc::unknown_instance: return "UNKNOWN_INSTANCE";
        case Errc::parent_not_active: return "PARENT_NOT_ACTIVE";
        case Errc::capacity_exceeded: return "CAPACITY_EXCEEDED";
        case Errc::unknown_cloud: return "UNKNOWN_CLOUD";
        case Errc::already_up: return "ALREADY_UP";
        case Errc::agent_down: return "AGENT_DOWN";
        case Errc::launch_fault: return "LAUNCH_FAULT";
        case Errc::unknown_target: return "UNKNOWN_TARGET";
        case Errc::parse_error: return "PARSE_ERROR";
        case Errc::validation_error: return "VALIDATION_ERROR";
        case Errc::unknown_deployment: return "UNKNOWN_DEPLOYMENT";
        case Errc::step_failure: return "STEP_FAILURE";
        case Errc::precondition_failed: return "PRECONDITION_FAILED";
        case Errc::too_few_members: return "TOO_FEW_MEMBERS";
        case Errc::subnet_too_small: return "SUBNET_TOO_SMALL";
        case Errc::no_server_candidate: return "NO_SERVER_CANDIDATE";
        case Errc::no_healthy_backend: return "NO_HEALTHY_BACKEND";
        case Errc::address_in_use: return "ADDRESS_IN_USE";
        case Errc::snapshot_write_failure: return "SNAPSHOT_WRITE_FAILURE";
        case Errc::not_found: return "NOT_FOUND";
        case Errc::bad_request: return "BAD_REQUEST";
        case Errc::internal: return "INTERNAL";
    }
    return "INTERNAL";
}

}  // namespace netsmo
