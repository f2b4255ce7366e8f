// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <vector>

#include "clock.hpp"
#include "document.hpp"
#include "service_framework.hpp"

namespace netsmo {

constexpr const char* kRecipeSchema = "netsmo/recipe/1";

/// One named stage of a component script. Durations are simulated ticks; a
/// real runner would execute the named stage instead.
struct ScriptStep {
    std::string name;
    Tick duration = 1;
};

struct ComponentSpec {
    std::string name;
    std::string image_ref;
    std::string parent;  // empty at the roots of the component tree
    std::set<std::string> roles;
    int multiplicity = 1;
    std::vector<ScriptStep> deploy_script;
    std::vector<ScriptStep> app_script;
};

struct NetworkServiceSpec {
    ServiceType type = ServiceType::Vpn;
    Document params = Document::object();
    std::set<std::string> attach_roles;
};

struct CloudAlloc {
    std::string cloud_id;
    int node_count = 0;
};

struct DeploymentRecipe {
    std::string deployment_id;
    std::vector<ComponentSpec> components;
    std::vector<NetworkServiceSpec> network_services;
    std::vector<CloudAlloc> clouds;

    /// Collects every violation, not just the first.
    /// Throws Error{validation_error, detail: {violations: [{code, ...}]}}.
    void validate() const;
    Document to_document() const;
};

/// Structural check with exact field paths, then full validation.
/// Throws Error{parse_error, detail: {path, reason}} or the validate() error.
DeploymentRecipe parse_recipe(const Document& doc);

}  // namespace netsmo
