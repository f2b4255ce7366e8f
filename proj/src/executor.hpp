// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "net_services.hpp"
#include "planner.hpp"
#include "recipe.hpp"
#include "service_framework.hpp"
#include "sim_harness.hpp"

namespace netsmo {

StateKey plan_key(const std::string& deployment_id);
StateKey step_outcome_key(const std::string& deployment_id, const std::string& step_id);
StateKey deployment_status_key(const std::string& deployment_id);
StateKey report_key(const std::string& deployment_id);

struct StepReport {
    std::string step_id;
    StepKind kind = StepKind::Provision;
    std::string outcome;  // DONE | FAILED | ABORTED
    Tick start = 0;
    Tick end = 0;
    Document error = Document::object();  // empty when clean

    Document to_document() const;
    static StepReport from_document(const Document& doc);
};

struct DeploymentReport {
    std::string deployment_id;
    std::string status;  // DONE | FAILED
    std::vector<StepReport> steps;  // plan order
    Tick total_duration = 0;
    std::vector<std::string> critical_path;  // step ids, earliest first

    Document to_document() const;
    static DeploymentReport from_document(const Document& doc);
};

struct OverheadReport {
    DeploymentReport baseline;
    DeploymentReport with_services;
    Tick overhead = 0;

    Document to_document() const;
};

/// Runs deployment plans on the simulated world. Independent DAG branches run
/// concurrently on the clock; every step outcome is persisted before any
/// dependent starts, so a killed run resumes from the last step boundary. A
/// failing step fails its transitive dependents (ABORTED) while unrelated
/// branches keep going.
class DeploymentExecutor {
public:
    using ReportCallback = std::function<void(const DeploymentReport&)>;

    DeploymentExecutor(StateStore& store, ServiceManager& manager, NetServiceDeployer& net,
                       SimHarness& harness);

    void execute_async(const DeploymentRecipe& recipe, ReportCallback done);
    /// Steps with a persisted outcome are adopted, not re-run.
    void execute_plan_async(DeploymentPlan plan, ReportCallback done);
    /// Re-executes the persisted plan, restarting the clock after the last
    /// persisted outcome. Error{unknown_deployment} without one.
    void resume_async(const std::string& deployment_id, ReportCallback done);

    /// Runs the recipe twice on fresh same-seed worlds, once with the network
    /// services stripped. Error{precondition_failed} if the recipe has none.
    static OverheadReport measure_overhead(const DeploymentRecipe& recipe,
                                           const ScenarioSpec& scenario);

private:
    struct Run;

    void kick(const std::shared_ptr<Run>& run);
    void try_start(const std::shared_ptr<Run>& run, std::size_t idx);
    void start_step(const std::shared_ptr<Run>& run, std::size_t idx);
    void start_barrier(const std::shared_ptr<Run>& run, std::size_t idx, StepReport rec);
    void abort_step(const std::shared_ptr<Run>& run, std::size_t idx, const std::string& by);
    void settle(const std::shared_ptr<Run>& run, std::size_t idx, StepReport rec);
    void finish(const std::shared_ptr<Run>& run);

    StateStore& store_;
    ServiceManager& manager_;
    NetServiceDeployer& net_;
    SimHarness& harness_;
};

}  // namespace netsmo
