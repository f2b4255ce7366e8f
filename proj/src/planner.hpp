// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <vector>

#include "document.hpp"
#include "keys.hpp"
#include "recipe.hpp"

namespace netsmo {

constexpr const char* kPlanSchema = "netsmo/plan/1";

enum class StepKind {
    Provision,
    AgentBoot,
    NetServiceDeploy,
    BarrierWait,
    ComponentDeployScript,
    ComponentAppScript,
};

const char* step_kind_name(StepKind k);
StepKind parse_step_kind(const std::string& text);

/// One node of the step DAG. The payload carries everything the executor
/// needs, so a persisted plan re-executes without the recipe.
struct PlanStep {
    std::string step_id;
    StepKind kind = StepKind::Provision;
    std::string target;
    std::set<std::string> depends_on;
    Document payload = Document::object();

    Document to_document() const;
    static PlanStep from_document(const Document& doc);
};

struct DeploymentPlan {
    std::string deployment_id;
    std::vector<PlanStep> steps;  // deterministic order: provisions, boots,
                                  // services, barriers, deploy then app scripts

    const PlanStep* step(const std::string& step_id) const;
    Document to_document() const;
    static DeploymentPlan from_document(const Document& doc);
};

struct PlannedNode {
    std::string node_id;
    std::string cloud_id;
    std::string component;
    std::set<std::string> roles;
};

/// Multiplicity expansion (name for a single node, name-1..name-k otherwise)
/// and sequential cloud fill in recipe order.
std::vector<PlannedNode> expand_nodes(const DeploymentRecipe& recipe);

/// Pure function of the recipe; equal recipes give byte-identical plan
/// documents. Validates the recipe first.
///
/// Dependency shape: provision -> agent-boot per node; a network service
/// needs the boots of every attached node; a component's deploy script needs
/// its node's boot plus the deploy scripts of all parent nodes; its app
/// script needs the deploy script plus one readiness barrier per attached
/// network service. Barriers have no DAG edges in: they watch the service
/// status key and settle when it is written.
DeploymentPlan plan_deployment(const DeploymentRecipe& recipe);

}  // namespace netsmo
