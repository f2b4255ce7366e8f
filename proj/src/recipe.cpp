// SPDX-License-Identifier: Apache-2.0
#include "recipe.hpp"

#include <algorithm>
#include <map>

#include "errors.hpp"
#include "keys.hpp"

namespace netsmo {

namespace {

[[noreturn]] void parse_fail(const std::string& path, const std::string& reason) {
    throw Error(Errc::parse_error, "recipe: " + path + ": " + reason,
                Document{{"path", path}, {"reason", reason}});
}

const Document& require_field(const Document& doc, const char* field, const std::string& path) {
    if (!doc.is_object()) parse_fail(path, "expected an object");
    auto it = doc.find(field);
    if (it == doc.end()) parse_fail(path + "." + field, "missing required field");
    return *it;
}

std::string require_string(const Document& doc, const char* field, const std::string& path) {
    const Document& v = require_field(doc, field, path);
    if (!v.is_string()) parse_fail(path + "." + field, "expected a string");
    return v.get<std::string>();
}

std::set<std::string> string_set(const Document& doc, const char* field, const std::string& path) {
    auto it = doc.find(field);
    if (it == doc.end()) return {};
    if (!it->is_array()) parse_fail(path + "." + field, "expected an array of strings");
    std::set<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) parse_fail(path + "." + field, "expected an array of strings");
        out.insert(v.get<std::string>());
    }
    return out;
}

std::vector<ScriptStep> script_steps(const Document& doc, const char* field,
                                     const std::string& path) {
    auto it = doc.find(field);
    if (it == doc.end()) return {};
    if (!it->is_array()) parse_fail(path + "." + field, "expected an array of steps");
    std::vector<ScriptStep> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string step_path = path + "." + field + "[" + std::to_string(i) + "]";
        const Document& step = (*it)[i];
        ScriptStep s;
        s.name = require_string(step, "name", step_path);
        if (step.contains("duration")) {
            if (!step.at("duration").is_number_integer() ||
                step.at("duration").get<std::int64_t>() < 0)
                parse_fail(step_path + ".duration", "expected an integer tick count >= 0");
            s.duration = step.at("duration").get<Tick>();
        }
        out.push_back(std::move(s));
    }
    return out;
}

Document script_doc(const std::vector<ScriptStep>& steps) {
    Document arr = Document::array();
    for (const auto& s : steps) arr.push_back(Document{{"name", s.name}, {"duration", s.duration}});
    return arr;
}

}  // namespace

DeploymentRecipe parse_recipe(const Document& doc) {
    if (!doc.is_object()) parse_fail("$", "expected an object");
    if (doc.contains("schema") && doc.at("schema") != kRecipeSchema)
        parse_fail("$.schema", std::string("expected ") + kRecipeSchema);

    DeploymentRecipe recipe;
    recipe.deployment_id = require_string(doc, "deployment_id", "$");

    const Document& components = require_field(doc, "components", "$");
    if (!components.is_array()) parse_fail("$.components", "expected an array");
    for (std::size_t i = 0; i < components.size(); ++i) {
        const std::string path = "$.components[" + std::to_string(i) + "]";
        const Document& c = components[i];
        ComponentSpec comp;
        comp.name = require_string(c, "name", path);
        comp.image_ref = require_string(c, "image_ref", path);
        if (c.contains("parent")) {
            if (!c.at("parent").is_string()) parse_fail(path + ".parent", "expected a string");
            comp.parent = c.at("parent").get<std::string>();
        }
        comp.roles = string_set(c, "roles", path);
        if (c.contains("multiplicity")) {
            if (!c.at("multiplicity").is_number_integer())
                parse_fail(path + ".multiplicity", "expected an integer");
            comp.multiplicity = c.at("multiplicity").get<int>();
        }
        comp.deploy_script = script_steps(c, "deploy_script", path);
        comp.app_script = script_steps(c, "app_script", path);
        recipe.components.push_back(std::move(comp));
    }

    if (doc.contains("network_services")) {
        const Document& services = doc.at("network_services");
        if (!services.is_array()) parse_fail("$.network_services", "expected an array");
        for (std::size_t i = 0; i < services.size(); ++i) {
            const std::string path = "$.network_services[" + std::to_string(i) + "]";
            const Document& s = services[i];
            NetworkServiceSpec spec;
            try {
                spec.type = parse_service_type(require_string(s, "type", path));
            } catch (const Error&) {
                parse_fail(path + ".type", "expected VPN, FIREWALL or LOAD_BALANCER");
            }
            if (s.contains("params")) {
                if (!s.at("params").is_object()) parse_fail(path + ".params", "expected an object");
                spec.params = s.at("params");
            }
            spec.attach_roles = string_set(s, "attach_roles", path);
            recipe.network_services.push_back(std::move(spec));
        }
    }

    const Document& clouds = require_field(doc, "clouds", "$");
    if (!clouds.is_array()) parse_fail("$.clouds", "expected an array");
    for (std::size_t i = 0; i < clouds.size(); ++i) {
        const std::string path = "$.clouds[" + std::to_string(i) + "]";
        const Document& c = clouds[i];
        CloudAlloc alloc;
        alloc.cloud_id = require_string(c, "cloud_id", path);
        const Document& count = require_field(c, "node_count", path);
        if (!count.is_number_integer()) parse_fail(path + ".node_count", "expected an integer");
        alloc.node_count = count.get<int>();
        recipe.clouds.push_back(std::move(alloc));
    }

    recipe.validate();
    return recipe;
}

void DeploymentRecipe::validate() const {
    Document violations = Document::array();
    auto flag = [&violations](const char* code, Document detail) {
        detail["code"] = code;
        violations.push_back(std::move(detail));
    };

    if (!valid_key_segment(deployment_id))
        flag("invalid_deployment_id", Document{{"deployment_id", deployment_id}});
    if (components.empty()) flag("no_components", Document::object());

    std::map<std::string, const ComponentSpec*> by_name;
    std::set<std::string> all_roles;
    int total_nodes = 0;
    for (const auto& comp : components) {
        if (!valid_key_segment(comp.name))
            flag("invalid_component_name", Document{{"component", comp.name}});
        if (!by_name.emplace(comp.name, &comp).second)
            flag("duplicate_component", Document{{"component", comp.name}});
        if (comp.image_ref.empty()) flag("empty_image", Document{{"component", comp.name}});
        if (comp.multiplicity < 1)
            flag("bad_multiplicity",
                 Document{{"component", comp.name}, {"multiplicity", comp.multiplicity}});
        else
            total_nodes += comp.multiplicity;
        all_roles.insert(comp.roles.begin(), comp.roles.end());
    }
    for (const auto& comp : components) {
        if (comp.parent.empty()) continue;
        if (by_name.find(comp.parent) == by_name.end())
            flag("unknown_parent", Document{{"component", comp.name}, {"parent", comp.parent}});
    }

    // Each component has at most one parent, so any cycle is a plain loop in
    // the parent chain. Walk each chain once.
    std::map<std::string, int> color;  // 0 fresh, 1 on current walk, 2 done
    for (const auto& comp : components) {
        if (color[comp.name] != 0) continue;
        std::vector<std::string> chain;
        std::string cur = comp.name;
        while (!cur.empty() && by_name.count(cur) && color[cur] == 0) {
            color[cur] = 1;
            chain.push_back(cur);
            cur = by_name.at(cur)->parent;
        }
        if (!cur.empty() && by_name.count(cur) && color[cur] == 1) {
            Document cycle = Document::array();
            bool in_cycle = false;
            for (const auto& name : chain) {
                if (name == cur) in_cycle = true;
                if (in_cycle) cycle.push_back(name);
            }
            flag("parent_cycle", Document{{"cycle", cycle}});
        }
        for (const auto& name : chain) color[name] = 2;
    }

    std::set<std::string> seen_types;
    for (const auto& svc : network_services) {
        const char* type = service_type_name(svc.type);
        if (svc.type != ServiceType::Vpn && svc.type != ServiceType::Firewall &&
            svc.type != ServiceType::LoadBalancer)
            flag("not_a_network_service", Document{{"type", type}});
        if (!seen_types.insert(type).second)
            flag("duplicate_network_service", Document{{"type", type}});
        if (svc.attach_roles.empty()) flag("empty_attach_roles", Document{{"type", type}});
        Document unknown = Document::array();
        for (const auto& role : svc.attach_roles)
            if (all_roles.find(role) == all_roles.end()) unknown.push_back(role);
        if (!unknown.empty())
            flag("unknown_attach_role", Document{{"type", type}, {"roles", unknown}});
    }

    int total_slots = 0;
    std::set<std::string> cloud_ids;
    for (const auto& cloud : clouds) {
        if (!cloud_ids.insert(cloud.cloud_id).second)
            flag("duplicate_cloud", Document{{"cloud_id", cloud.cloud_id}});
        if (cloud.node_count < 0)
            flag("bad_node_count",
                 Document{{"cloud_id", cloud.cloud_id}, {"node_count", cloud.node_count}});
        else
            total_slots += cloud.node_count;
    }
    if (!components.empty() && total_slots < total_nodes)
        flag("insufficient_capacity",
             Document{{"required", total_nodes}, {"available", total_slots}});

    if (!violations.empty())
        throw Error(Errc::validation_error,
                    "recipe has " + std::to_string(violations.size()) + " violation(s)",
                    Document{{"violations", violations}});
}

Document DeploymentRecipe::to_document() const {
    Document comps = Document::array();
    for (const auto& comp : components) {
        Document roles = Document::array();
        for (const auto& role : comp.roles) roles.push_back(role);
        Document c{{"name", comp.name},
                   {"image_ref", comp.image_ref},
                   {"roles", roles},
                   {"multiplicity", comp.multiplicity},
                   {"deploy_script", script_doc(comp.deploy_script)},
                   {"app_script", script_doc(comp.app_script)}};
        if (!comp.parent.empty()) c["parent"] = comp.parent;
        comps.push_back(std::move(c));
    }
    Document services = Document::array();
    for (const auto& svc : network_services) {
        Document roles = Document::array();
        for (const auto& role : svc.attach_roles) roles.push_back(role);
        services.push_back(Document{{"type", service_type_name(svc.type)},
                                    {"params", svc.params},
                                    {"attach_roles", roles}});
    }
    Document cloud_arr = Document::array();
    for (const auto& cloud : clouds)
        cloud_arr.push_back(
            Document{{"cloud_id", cloud.cloud_id}, {"node_count", cloud.node_count}});
    return Document{{"schema", kRecipeSchema},
                    {"deployment_id", deployment_id},
                    {"components", comps},
                    {"network_services", services},
                    {"clouds", cloud_arr}};
}

}  // namespace netsmo
