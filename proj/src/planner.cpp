// SPDX-License-Identifier: Apache-2.0
#include "planner.hpp"

#include <map>

#include "errors.hpp"

namespace netsmo {

namespace {

constexpr const char* kStepKinds[] = {
    "PROVISION",      "AGENT_BOOT",              "NET_SERVICE_DEPLOY",
    "BARRIER_WAIT",   "COMPONENT_DEPLOY_SCRIPT", "COMPONENT_APP_SCRIPT",
};

Tick script_duration(const std::vector<ScriptStep>& steps) {
    Tick total = 0;
    for (const auto& s : steps) total += s.duration;
    return total;
}

Document roles_doc(const std::set<std::string>& roles) {
    Document arr = Document::array();
    for (const auto& role : roles) arr.push_back(role);
    return arr;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a)
        if (b.count(x)) return true;
    return false;
}

}  // namespace

const char* step_kind_name(StepKind k) { return kStepKinds[static_cast<int>(k)]; }

StepKind parse_step_kind(const std::string& text) {
    for (int i = 0; i < 6; ++i)
        if (text == kStepKinds[i]) return static_cast<StepKind>(i);
    throw Error(Errc::parse_error, "not a step kind: " + text);
}

Document PlanStep::to_document() const {
    Document deps = Document::array();
    for (const auto& d : depends_on) deps.push_back(d);
    return Document{{"step_id", step_id},
                    {"kind", step_kind_name(kind)},
                    {"target", target},
                    {"depends_on", deps},
                    {"payload", payload}};
}

PlanStep PlanStep::from_document(const Document& doc) {
    try {
        PlanStep step;
        step.step_id = doc.at("step_id").get<std::string>();
        step.kind = parse_step_kind(doc.at("kind").get<std::string>());
        step.target = doc.at("target").get<std::string>();
        for (const auto& d : doc.at("depends_on")) step.depends_on.insert(d.get<std::string>());
        step.payload = doc.at("payload");
        return step;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad plan step: ") + e.what());
    }
}

const PlanStep* DeploymentPlan::step(const std::string& step_id) const {
    for (const auto& s : steps)
        if (s.step_id == step_id) return &s;
    return nullptr;
}

Document DeploymentPlan::to_document() const {
    Document arr = Document::array();
    for (const auto& s : steps) arr.push_back(s.to_document());
    return Document{{"schema", kPlanSchema}, {"deployment_id", deployment_id}, {"steps", arr}};
}

DeploymentPlan DeploymentPlan::from_document(const Document& doc) {
    try {
        if (doc.at("schema") != kPlanSchema)
            throw Error(Errc::parse_error,
                        "not a " + std::string(kPlanSchema) + " document");
        DeploymentPlan plan;
        plan.deployment_id = doc.at("deployment_id").get<std::string>();
        for (const auto& s : doc.at("steps")) plan.steps.push_back(PlanStep::from_document(s));
        return plan;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad plan: ") + e.what());
    }
}

std::vector<PlannedNode> expand_nodes(const DeploymentRecipe& recipe) {
    std::vector<PlannedNode> nodes;
    for (const auto& comp : recipe.components) {
        for (int i = 1; i <= comp.multiplicity; ++i) {
            std::string node_id =
                comp.multiplicity == 1 ? comp.name : comp.name + "-" + std::to_string(i);
            nodes.push_back({std::move(node_id), "", comp.name, comp.roles});
        }
    }
    std::size_t next = 0;
    for (const auto& cloud : recipe.clouds)
        for (int i = 0; i < cloud.node_count && next < nodes.size(); ++i)
            nodes[next++].cloud_id = cloud.cloud_id;
    return nodes;
}

DeploymentPlan plan_deployment(const DeploymentRecipe& recipe) {
    recipe.validate();
    auto nodes = expand_nodes(recipe);
    {
        std::set<std::string> ids;
        for (const auto& n : nodes)
            if (!ids.insert(n.node_id).second)
                throw Error(Errc::validation_error, "expanded node ids collide",
                            Document{{"violations", Document::array({Document{
                                         {"code", "duplicate_node"}, {"node", n.node_id}}})}});
    }

    DeploymentPlan plan;
    plan.deployment_id = recipe.deployment_id;

    for (const auto& n : nodes) {
        plan.steps.push_back({"provision." + n.node_id,
                              StepKind::Provision,
                              n.node_id,
                              {},
                              Document{{"node", n.node_id},
                                       {"cloud", n.cloud_id},
                                       {"component", n.component},
                                       {"roles", roles_doc(n.roles)}}});
        plan.steps.push_back({"agent-boot." + n.node_id,
                              StepKind::AgentBoot,
                              n.node_id,
                              {"provision." + n.node_id},
                              Document{{"node", n.node_id}}});
    }

    for (const auto& svc : recipe.network_services) {
        const char* type = service_type_name(svc.type);
        const std::string server_role = svc.params.value("server_role", std::string());
        Document members = Document::array();
        std::set<std::string> deps;
        for (const auto& n : nodes) {
            if (!intersects(n.roles, svc.attach_roles)) continue;
            members.push_back(Document{
                {"node", n.node_id},
                {"server_tag", !server_role.empty() && n.roles.count(server_role) > 0}});
            deps.insert("agent-boot." + n.node_id);
        }
        plan.steps.push_back({std::string("net.") + type,
                              StepKind::NetServiceDeploy,
                              type,
                              std::move(deps),
                              Document{{"type", type}, {"params", svc.params},
                                       {"members", members}}});
    }

    for (const auto& comp : recipe.components) {
        for (const auto& svc : recipe.network_services) {
            if (!intersects(comp.roles, svc.attach_roles)) continue;
            const char* type = service_type_name(svc.type);
            plan.steps.push_back({"barrier." + comp.name + "." + type,
                                  StepKind::BarrierWait,
                                  comp.name + "." + type,
                                  {},
                                  Document{{"type", type}, {"component", comp.name}}});
        }
    }

    std::map<std::string, std::vector<std::string>> nodes_of;
    for (const auto& n : nodes) nodes_of[n.component].push_back(n.node_id);

    for (const auto& n : nodes) {
        const ComponentSpec* comp = nullptr;
        for (const auto& c : recipe.components)
            if (c.name == n.component) comp = &c;
        std::set<std::string> deps{"agent-boot." + n.node_id};
        if (!comp->parent.empty())
            for (const auto& parent_node : nodes_of.at(comp->parent))
                deps.insert("deploy-script." + parent_node);
        plan.steps.push_back({"deploy-script." + n.node_id,
                              StepKind::ComponentDeployScript,
                              n.node_id,
                              std::move(deps),
                              Document{{"node", n.node_id},
                                       {"component", n.component},
                                       {"duration", script_duration(comp->deploy_script)}}});
    }

    for (const auto& n : nodes) {
        const ComponentSpec* comp = nullptr;
        for (const auto& c : recipe.components)
            if (c.name == n.component) comp = &c;
        std::set<std::string> deps{"deploy-script." + n.node_id};
        for (const auto& svc : recipe.network_services)
            if (intersects(comp->roles, svc.attach_roles))
                deps.insert("barrier." + comp->name + "." + service_type_name(svc.type));
        plan.steps.push_back({"app-script." + n.node_id,
                              StepKind::ComponentAppScript,
                              n.node_id,
                              std::move(deps),
                              Document{{"node", n.node_id},
                                       {"component", n.component},
                                       {"duration", script_duration(comp->app_script)},
                                       {"image", comp->image_ref}}});
    }

    return plan;
}

}  // namespace netsmo
