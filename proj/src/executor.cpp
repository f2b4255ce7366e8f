// SPDX-License-Identifier: Apache-2.0
#include "executor.hpp"

#include <algorithm>
#include <map>

#include "errors.hpp"

namespace netsmo {

namespace {

StateKey deployment_root(const std::string& deployment_id) {
    if (!valid_key_segment(deployment_id))
        throw Error(Errc::bad_request, "invalid deployment id: " + deployment_id);
    return StateKey::parse("deploy").child(deployment_id);
}

Document error_doc(const Error& e) {
    return Document{{"code", errc_name(e.code())}, {"message", e.what()}, {"detail", e.detail()}};
}

}  // namespace

StateKey plan_key(const std::string& deployment_id) {
    return deployment_root(deployment_id).child("plan");
}

StateKey step_outcome_key(const std::string& deployment_id, const std::string& step_id) {
    return deployment_root(deployment_id).child("steps").child(step_id);
}

StateKey deployment_status_key(const std::string& deployment_id) {
    return deployment_root(deployment_id).child("status");
}

StateKey report_key(const std::string& deployment_id) {
    return deployment_root(deployment_id).child("report");
}

Document StepReport::to_document() const {
    Document doc{{"step_id", step_id},
                 {"kind", step_kind_name(kind)},
                 {"outcome", outcome},
                 {"start", start},
                 {"end", end}};
    if (!error.empty()) doc["error"] = error;
    return doc;
}

StepReport StepReport::from_document(const Document& doc) {
    try {
        StepReport rec;
        rec.step_id = doc.at("step_id").get<std::string>();
        rec.kind = parse_step_kind(doc.at("kind").get<std::string>());
        rec.outcome = doc.at("outcome").get<std::string>();
        rec.start = doc.at("start").get<Tick>();
        rec.end = doc.at("end").get<Tick>();
        if (doc.contains("error")) rec.error = doc.at("error");
        return rec;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad step outcome: ") + e.what());
    }
}

Document DeploymentReport::to_document() const {
    Document steps_doc = Document::array();
    for (const auto& s : steps) steps_doc.push_back(s.to_document());
    Document path = Document::array();
    for (const auto& id : critical_path) path.push_back(id);
    return Document{{"schema", "netsmo/report/1"},
                    {"deployment_id", deployment_id},
                    {"status", status},
                    {"total_duration", total_duration},
                    {"critical_path", path},
                    {"steps", steps_doc}};
}

DeploymentReport DeploymentReport::from_document(const Document& doc) {
    try {
        DeploymentReport report;
        report.deployment_id = doc.at("deployment_id").get<std::string>();
        report.status = doc.at("status").get<std::string>();
        report.total_duration = doc.at("total_duration").get<Tick>();
        for (const auto& id : doc.at("critical_path"))
            report.critical_path.push_back(id.get<std::string>());
        for (const auto& s : doc.at("steps"))
            report.steps.push_back(StepReport::from_document(s));
        return report;
    } catch (const Document::exception& e) {
        throw Error(Errc::parse_error, std::string("bad report: ") + e.what());
    }
}

Document OverheadReport::to_document() const {
    return Document{{"baseline", baseline.to_document()},
                    {"with_services", with_services.to_document()},
                    {"overhead", overhead}};
}

struct DeploymentExecutor::Run {
    DeploymentPlan plan;
    std::map<std::string, std::size_t> index;
    std::vector<std::optional<StepReport>> settled;
    std::vector<bool> started;
    std::vector<std::vector<std::size_t>> dependents;
    std::size_t remaining = 0;
    ReportCallback done;
    std::vector<std::shared_ptr<Subscription>> watches;
};

DeploymentExecutor::DeploymentExecutor(StateStore& store, ServiceManager& manager,
                                       NetServiceDeployer& net, SimHarness& harness)
    : store_(store), manager_(manager), net_(net), harness_(harness) {}

void DeploymentExecutor::execute_async(const DeploymentRecipe& recipe, ReportCallback done) {
    execute_plan_async(plan_deployment(recipe), std::move(done));
}

void DeploymentExecutor::execute_plan_async(DeploymentPlan plan, ReportCallback done) {
    auto run = std::make_shared<Run>();
    run->plan = std::move(plan);
    run->done = std::move(done);
    const auto& steps = run->plan.steps;

    store_.put(plan_key(run->plan.deployment_id), run->plan.to_document().dump());
    store_.put(deployment_status_key(run->plan.deployment_id),
               Document{{"state", "RUNNING"}}.dump());

    for (std::size_t i = 0; i < steps.size(); ++i) run->index[steps[i].step_id] = i;
    run->settled.resize(steps.size());
    run->started.resize(steps.size(), false);
    run->dependents.resize(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
        for (const auto& dep : steps[i].depends_on) {
            auto it = run->index.find(dep);
            if (it == run->index.end())
                throw Error(Errc::validation_error,
                            "step " + steps[i].step_id + " depends on unknown step " + dep);
            run->dependents[it->second].push_back(i);
        }
    }

    run->remaining = steps.size();
    for (std::size_t i = 0; i < steps.size(); ++i) {
        auto outcome = store_.get(step_outcome_key(run->plan.deployment_id, steps[i].step_id));
        if (!outcome) continue;
        run->settled[i] = StepReport::from_document(Document::parse(outcome->value));
        run->started[i] = true;
        --run->remaining;
    }

    if (run->remaining == 0) {
        finish(run);
        return;
    }
    kick(run);
}

void DeploymentExecutor::resume_async(const std::string& deployment_id, ReportCallback done) {
    auto entry = store_.get(plan_key(deployment_id));
    if (!entry)
        throw Error(Errc::unknown_deployment, "no persisted plan for " + deployment_id,
                    Document{{"deployment_id", deployment_id}});
    auto plan = DeploymentPlan::from_document(Document::parse(entry->value));

    Tick last_end = 0;
    for (const auto& step : plan.steps) {
        auto outcome = store_.get(step_outcome_key(deployment_id, step.step_id));
        if (!outcome) continue;
        last_end = std::max(
            last_end, StepReport::from_document(Document::parse(outcome->value)).end);
    }
    if (harness_.clock().now() < last_end) harness_.clock().restart_at(last_end);

    execute_plan_async(std::move(plan), std::move(done));
}

void DeploymentExecutor::kick(const std::shared_ptr<Run>& run) {
    for (std::size_t i = 0; i < run->plan.steps.size(); ++i) {
        if (run->started[i]) continue;
        // A dependent of an adopted failure must still be aborted here.
        for (const auto& dep : run->plan.steps[i].depends_on) {
            const auto& dep_state = run->settled[run->index.at(dep)];
            if (dep_state && dep_state->outcome != "DONE") {
                abort_step(run, i, dep);
                break;
            }
        }
        if (!run->started[i]) try_start(run, i);
    }
}

void DeploymentExecutor::try_start(const std::shared_ptr<Run>& run, std::size_t idx) {
    if (run->started[idx] || run->settled[idx]) return;
    for (const auto& dep : run->plan.steps[idx].depends_on) {
        const auto& dep_state = run->settled[run->index.at(dep)];
        if (!dep_state || dep_state->outcome != "DONE") return;
    }
    start_step(run, idx);
}

void DeploymentExecutor::abort_step(const std::shared_ptr<Run>& run, std::size_t idx,
                                    const std::string& by) {
    if (run->settled[idx]) return;
    StepReport rec;
    rec.step_id = run->plan.steps[idx].step_id;
    rec.kind = run->plan.steps[idx].kind;
    rec.outcome = "ABORTED";
    rec.start = rec.end = harness_.clock().now();
    rec.error = Document{{"aborted_by", by}};
    run->started[idx] = true;
    settle(run, idx, std::move(rec));
}

void DeploymentExecutor::settle(const std::shared_ptr<Run>& run, std::size_t idx,
                                StepReport rec) {
    if (run->settled[idx]) return;
    store_.put(step_outcome_key(run->plan.deployment_id, rec.step_id), rec.to_document().dump());
    bool failed = rec.outcome != "DONE";
    run->settled[idx] = std::move(rec);
    --run->remaining;

    const std::string& step_id = run->plan.steps[idx].step_id;
    for (std::size_t j : run->dependents[idx]) {
        if (failed)
            abort_step(run, j, step_id);
        else
            try_start(run, j);
    }
    if (run->remaining == 0) finish(run);
}

void DeploymentExecutor::start_step(const std::shared_ptr<Run>& run, std::size_t idx) {
    run->started[idx] = true;
    const PlanStep& step = run->plan.steps[idx];
    const std::string& dep_id = run->plan.deployment_id;
    SimClock& clock = harness_.clock();

    StepReport rec;
    rec.step_id = step.step_id;
    rec.kind = step.kind;
    rec.start = clock.now();

    if (harness_.take_fault(std::string("step:") + step_kind_name(step.kind))) {
        rec.end = clock.now();
        rec.outcome = "FAILED";
        rec.error = Document{{"code", "STEP_FAULT"}, {"message", "injected step fault"}};
        settle(run, idx, std::move(rec));
        return;
    }

    auto settle_async = [this, run, idx](StepReport r, std::optional<Error> err) {
        r.end = harness_.clock().now();
        if (err) {
            r.outcome = "FAILED";
            r.error = error_doc(*err);
        } else {
            r.outcome = "DONE";
        }
        settle(run, idx, std::move(r));
    };

    try {
        switch (step.kind) {
        case StepKind::Provision: {
            std::set<std::string> roles;
            for (const auto& role : step.payload.at("roles")) roles.insert(role.get<std::string>());
            harness_.provision_node_async(
                step.payload.at("cloud").get<std::string>(),
                step.payload.at("node").get<std::string>(), roles, dep_id, false,
                [rec, settle_async](std::optional<Error> err) { settle_async(rec, std::move(err)); });
            return;
        }
        case StepKind::AgentBoot: {
            const std::string node = step.payload.at("node").get<std::string>();
            try {
                harness_.boot_agent_async(node, [rec, settle_async](std::optional<Error> err) {
                    settle_async(rec, std::move(err));
                });
            } catch (const Error& e) {
                // Resuming past a boot whose outcome write was lost.
                if (e.code() != Errc::already_up) throw;
                settle_async(rec, std::nullopt);
            }
            return;
        }
        case StepKind::NetServiceDeploy: {
            ServiceType type = parse_service_type(step.payload.at("type").get<std::string>());
            std::vector<AttachedNode> nodes;
            for (const auto& m : step.payload.at("members"))
                nodes.push_back(
                    {m.at("node").get<std::string>(), m.value("server_tag", false)});
            net_.apply(type, dep_id, nodes, step.payload.value("params", Document::object()),
                       [rec, settle_async](std::optional<Error> err) {
                           settle_async(rec, std::move(err));
                       });
            return;
        }
        case StepKind::BarrierWait:
            start_barrier(run, idx, std::move(rec));
            return;
        case StepKind::ComponentDeployScript: {
            Tick duration = step.payload.at("duration").get<Tick>();
            clock.schedule_in(duration, [rec, settle_async]() { settle_async(rec, std::nullopt); });
            return;
        }
        case StepKind::ComponentAppScript: {
            const std::string component = step.payload.at("component").get<std::string>();
            const std::string node = step.payload.at("node").get<std::string>();
            if (!manager_.has_service(component)) {
                ServiceDescriptor descriptor;
                descriptor.service_id = component;
                descriptor.service_type = ServiceType::App;
                descriptor.version = "1";
                descriptor.launch_spec.image_ref = step.payload.at("image").get<std::string>();
                manager_.register_service(descriptor);
            }
            Tick duration = step.payload.at("duration").get<Tick>();
            clock.schedule_in(duration, [this, run, idx, rec, component, node, dep_id]() {
                try {
                    manager_.deploy_async(
                        component, {node}, dep_id,
                        [this, run, idx, rec](const std::vector<ServiceInstance>& results) {
                            StepReport r = rec;
                            r.end = harness_.clock().now();
                            if (results.front().state == LifecycleState::Ready ||
                                results.front().state == LifecycleState::Running) {
                                r.outcome = "DONE";
                            } else {
                                r.outcome = "FAILED";
                                r.error = Document{{"code", "LAUNCH_FAULT"},
                                                   {"message", "component instance failed"},
                                                   {"detail",
                                                    Document{{"instance",
                                                              results.front().instance_id}}}};
                            }
                            settle(run, idx, std::move(r));
                        });
                } catch (const Error& e) {
                    StepReport r = rec;
                    r.end = harness_.clock().now();
                    r.outcome = "FAILED";
                    r.error = error_doc(e);
                    settle(run, idx, std::move(r));
                }
            });
            return;
        }
        }
    } catch (const Error& e) {
        rec.end = clock.now();
        rec.outcome = "FAILED";
        rec.error = error_doc(e);
        settle(run, idx, std::move(rec));
    }
}

void DeploymentExecutor::start_barrier(const std::shared_ptr<Run>& run, std::size_t idx,
                                       StepReport rec) {
    const PlanStep& step = run->plan.steps[idx];
    ServiceType type = parse_service_type(step.payload.at("type").get<std::string>());
    StateKey key = service_status_key(run->plan.deployment_id, type);
    SimClock& clock = harness_.clock();

    auto sub = store_.watch(key, 0);
    run->watches.push_back(sub);
    std::weak_ptr<Run> weak_run = run;
    std::weak_ptr<Subscription> weak_sub = sub;

    auto drain = [this, weak_run, weak_sub, idx, rec]() {
        auto run = weak_run.lock();
        auto sub = weak_sub.lock();
        if (!run || !sub || run->settled[idx]) return;
        while (auto ev = sub->poll()) {
            if (ev->kind != WatchEvent::Kind::Put) continue;
            std::string state = Document::parse(ev->entry.value).value("state", std::string());
            if (state != "READY" && state != "FAILED") continue;
            StepReport r = rec;
            r.end = harness_.clock().now();
            if (state == "READY") {
                r.outcome = "DONE";
            } else {
                r.outcome = "FAILED";
                r.error = Document{{"code", "STEP_FAILURE"},
                                   {"message", "network service status FAILED"}};
            }
            settle(run, idx, std::move(r));
            return;
        }
    };

    sub->set_notify([&clock, drain]() { clock.schedule_in(0, drain); });
    clock.schedule_in(0, drain);  // the status may already be in the backlog

    clock.schedule_in(harness_.scenario().barrier_timeout, [this, run, idx, rec]() {
        if (run->settled[idx]) return;
        StepReport r = rec;
        r.end = harness_.clock().now();
        r.outcome = "FAILED";
        r.error = Document{{"code", "TIMEOUT"}, {"message", "barrier timed out"}};
        settle(run, idx, std::move(r));
    });
}

void DeploymentExecutor::finish(const std::shared_ptr<Run>& run) {
    DeploymentReport report;
    report.deployment_id = run->plan.deployment_id;
    report.status = "DONE";
    for (const auto& s : run->settled) {
        report.steps.push_back(*s);
        if (s->outcome != "DONE") report.status = "FAILED";
    }

    if (!report.steps.empty()) {
        Tick min_start = report.steps.front().start;
        Tick max_end = report.steps.front().end;
        for (const auto& s : report.steps) {
            min_start = std::min(min_start, s.start);
            max_end = std::max(max_end, s.end);
        }
        report.total_duration = max_end - min_start;

        // Walk back from the latest-finishing step along its latest-finishing
        // dependency. A barrier's real trigger is its service's status write,
        // so the barrier hands the walk to the NET_SERVICE_DEPLOY step.
        auto end_of = [&](const std::string& id) { return run->settled[run->index.at(id)]->end; };
        std::string cur;
        for (const auto& s : report.steps)
            if (cur.empty() || s.end > end_of(cur) || (s.end == end_of(cur) && s.step_id < cur))
                cur = s.step_id;
        std::vector<std::string> path;
        while (true) {
            path.push_back(cur);
            const PlanStep& step = run->plan.steps[run->index.at(cur)];
            std::set<std::string> deps = step.depends_on;
            if (step.kind == StepKind::BarrierWait) {
                std::string net_id =
                    "net." + step.payload.at("type").get<std::string>();
                if (run->index.count(net_id)) deps.insert(net_id);
            }
            std::string next;
            for (const auto& dep : deps)
                if (next.empty() || end_of(dep) > end_of(next) ||
                    (end_of(dep) == end_of(next) && dep < next))
                    next = dep;
            if (next.empty()) break;
            cur = next;
        }
        report.critical_path.assign(path.rbegin(), path.rend());
    }

    store_.put(report_key(report.deployment_id), report.to_document().dump());
    store_.put(deployment_status_key(report.deployment_id),
               Document{{"state", report.status}}.dump());
    if (run->done) run->done(report);
}

OverheadReport DeploymentExecutor::measure_overhead(const DeploymentRecipe& recipe,
                                                    const ScenarioSpec& scenario) {
    if (recipe.network_services.empty())
        throw Error(Errc::precondition_failed, "recipe has no network services to measure");

    auto run_once = [&scenario](const DeploymentRecipe& r) {
        SimClock clock;
        StateStore store(clock);
        TraceLog trace;
        SimHarness harness(scenario, clock, store, trace);
        MessageBus bus(clock);
        SimLaunchDriver driver(harness);
        ServiceManager manager(store, bus, driver);
        NetServiceDeployer net(store, manager, harness);
        DeploymentExecutor executor(store, manager, net, harness);
        std::optional<DeploymentReport> out;
        executor.execute_async(r, [&out](const DeploymentReport& rep) { out = rep; });
        clock.run_until_idle();
        if (!out) throw Error(Errc::internal, "deployment never settled");
        return *out;
    };

    DeploymentRecipe baseline = recipe;
    baseline.network_services.clear();

    OverheadReport result;
    result.baseline = run_once(baseline);
    result.with_services = run_once(recipe);
    result.overhead = result.with_services.total_duration - result.baseline.total_duration;
    return result;
}

}  // namespace netsmo
