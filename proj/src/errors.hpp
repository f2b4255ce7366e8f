// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace netsmo {

using Document = nlohmann::json;

enum class Errc {
    // state store
    invalid_key,
    version_conflict,
    value_too_large,
    timeout,
    subscription_closed,
    corrupt_image,
    // message bus
    payload_too_large,
    bus_closed,
    duplicate_consumer,
    // service framework
    duplicate_service,
    invalid_descriptor,
    unknown_service,
    unknown_node,
    launch_failure,
    illegal_transition,
    unknown_instance,
    parent_not_active,
    // sim harness
    capacity_exceeded,
    unknown_cloud,
    already_up,
    agent_down,
    launch_fault,
    unknown_target,
    // recipe engine
    parse_error,
    validation_error,
    unknown_deployment,
    step_failure,
    precondition_failed,
    // net services
    too_few_members,
    subnet_too_small,
    no_server_candidate,
    no_healthy_backend,
    // agent
    address_in_use,
    snapshot_write_failure,
    not_found,
    bad_request,
    internal,
};

/// Stable machine-readable name, e.g. VERSION_CONFLICT. These strings are the
/// `error.code` values of the northbound API and must not change.
const char* errc_name(Errc code);

/// Every operation failure in the core carries one of these. `detail` holds
/// structured context (current_version, node_id, violations, ...).
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message, Document detail = Document::object())
        : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

    Errc code() const noexcept { return code_; }
    const Document& detail() const noexcept { return detail_; }
    const char* code_name() const noexcept { return errc_name(code_); }

private:
    Errc code_;
    Document detail_;
};

}  // namespace netsmo
