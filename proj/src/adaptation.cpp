#include "hytask/adaptation.hpp"

#include "hytask/error.hpp"
#include "hytask/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <random>

namespace hytask {

using nlohmann::json;

std::string to_string(ChangeType t) {
    switch (t) {
    case ChangeType::C1:
        return "C1";
    case ChangeType::C2:
        return "C2";
    case ChangeType::C3:
        return "C3";
    case ChangeType::C4:
        return "C4";
    }
    return "?";
}

std::string to_string(AdaptationLevel l) {
    switch (l) {
    case AdaptationLevel::NA:
        return "NA";
    case AdaptationLevel::A1:
        return "A1";
    case AdaptationLevel::A2:
        return "A2";
    case AdaptationLevel::A3:
        return "A3";
    }
    return "?";
}

std::string describe(const Change &c) {
    switch (c.type) {
    case ChangeType::C1:
        return "C1(" + c.task + ")";
    case ChangeType::C2:
        return "C2(" + format_number(c.value) + ")";
    case ChangeType::C3:
        return "C3(" + format_number(c.value) + ")";
    case ChangeType::C4:
        return "C4(" + c.agent + "," + c.task + "," + format_number(c.value) + ")";
    }
    return "?";
}

namespace {

const std::vector<std::string> kA2Stages{"S3", "S4"};
const std::vector<std::string> kA3Stages{"S0", "S1", "S2", "S3", "S4"};

std::map<std::string, int> overlay(std::map<std::string, int> base, const std::map<std::string, int> &top) {
    for (const auto &[k, v] : top)
        base[k] = v;
    return base;
}

bool is_deployed(const ExecutionContext &ctx, const ArchiveEntry &e) {
    for (const auto &[task, budget] : e.retry_dict) {
        auto it = ctx.deployed.find(task);
        if (it == ctx.deployed.end() || it->second != budget)
            return false;
    }
    return true;
}

ParametricPlanModel suffix_model(const ExecutionContext &ctx) {
    return build_suffix_model(ctx.spec, ctx.plan, ctx.cursor, ctx.failures, ctx.config.charge_exhaust);
}

void deploy_entry(ExecutionContext &ctx, const ArchiveEntry &e, AdaptationOutcome &out) {
    ctx.deployed = overlay(ctx.deployed, e.retry_dict);
    out.new_assignment = ctx.deployed;
}

void replan(ExecutionContext &ctx, AdaptationOutcome &out) {
    out.level = AdaptationLevel::A3;
    out.stages_rerun = kA3Stages;

    // Pairs that used up their attempts are known not to work.
    for (const auto &[task, f] : ctx.failures) {
        if (ctx.done.contains(task))
            continue;
        const std::string &agent = ctx.failure_agent.at(task);
        if (f >= std::max(ctx.spec.max_retries(agent, task), 1))
            ctx.spec.set_override(agent, task, 0.0);
    }
    ProblemSpec current = ctx.spec;
    for (auto &a : current.agents)
        a.start_location = ctx.location.at(a.id);
    current.completed_tasks.insert(ctx.done.begin(), ctx.done.end());

    Plan rest = plan_mission(current, ctx.config.planner);

    std::vector<PlanStep> steps(ctx.plan.total_order.begin(),
                                ctx.plan.total_order.begin() + static_cast<std::ptrdiff_t>(ctx.cursor));
    steps.insert(steps.end(), rest.total_order.begin(), rest.total_order.end());
    Plan full = make_plan(ctx.spec, std::move(steps));

    // Failure counts follow the (agent, task) pair; a reallocated task starts afresh.
    for (auto it = ctx.failures.begin(); it != ctx.failures.end();) {
        auto alloc = rest.allocation.find(it->first);
        if (!ctx.done.contains(it->first) &&
            (alloc == rest.allocation.end() || alloc->second != ctx.failure_agent.at(it->first))) {
            ctx.failure_agent.erase(it->first);
            it = ctx.failures.erase(it);
        } else {
            ++it;
        }
    }

    ExecutionContext probe = ctx;
    probe.plan = full;
    ParametricPlanModel model;
    SynthesisResult res;
    try {
        model = suffix_model(probe);
        res = synthesize(model, ctx.config.ga, ctx.config.solver);
    } catch (const ModelError &e) {
        throw MissionUnrecoverable(std::string("replanned mission cannot be modelled: ") + e.what());
    }
    if (res.archive.empty())
        throw MissionUnrecoverable("replanned mission has no verified assignment: " + res.archive.diagnostic);
    res.archive.plan_hash = plan_hash(full);

    ctx.plan = full;
    ctx.model = std::move(model);
    ctx.archive = std::move(res.archive);
    out.reduced_set_size = 0;
    out.new_plan = ctx.plan;
    deploy_entry(ctx, select_new_plan(ctx.archive.entries), out);
}

// Re-synthesis of the remaining mission on the current plan; false when nothing feasible exists.
bool resynthesize(ExecutionContext &ctx, AdaptationOutcome &out) {
    ParametricPlanModel model = suffix_model(ctx);
    SynthesisResult res = synthesize(model, ctx.config.ga, ctx.config.solver);
    if (res.archive.empty())
        return false;
    res.archive.plan_hash = plan_hash(ctx.plan);
    out.level = AdaptationLevel::A2;
    out.stages_rerun = kA2Stages;
    out.reduced_set_size = res.archive.entries.size();
    ctx.model = std::move(model);
    ctx.archive = std::move(res.archive);
    out.new_plan = ctx.plan;
    deploy_entry(ctx, select_new_plan(ctx.archive.entries), out);
    return true;
}

} // namespace

ExecutionContext make_context(const ProblemSpec &spec, const Plan &plan, const ParetoArchive &archive,
                              const ParametricPlanModel &model, const std::map<std::string, int> &deployed,
                              const AdaptationConfig &cfg) {
    ExecutionContext ctx;
    ctx.spec = spec;
    ctx.plan = plan;
    ctx.archive = archive;
    ctx.model = model;
    ctx.config = cfg;
    from_retry_dict(model, deployed);
    ctx.deployed = deployed;
    for (const auto &a : spec.agents)
        ctx.location[a.id] = a.start_location;
    ctx.done = spec.completed_tasks;
    return ctx;
}

bool prefix_consistent(const ExecutionContext &ctx, const ArchiveEntry &entry) {
    for (const auto &[task, f] : ctx.failures) {
        auto it = entry.retry_dict.find(task);
        if (ctx.done.contains(task)) {
            if (it != entry.retry_dict.end() && it->second <= f)
                return false;
            continue;
        }
        int budget = it == entry.retry_dict.end() ? 1 : it->second;
        if (budget <= f)
            return false;
    }
    return true;
}

double remaining_success_probability(const ExecutionContext &ctx, const ArchiveEntry &entry) {
    ParametricPlanModel m = suffix_model(ctx);
    RetryAssignment x;
    try {
        x = from_retry_dict(m, overlay(ctx.deployed, entry.retry_dict));
    } catch (const ContractViolation &) {
        return 0.0;
    }
    return evaluate_metrics(m, x, ctx.config.solver).success_probability;
}

std::vector<ArchiveEntry> reduce_ps_tf(const ExecutionContext &ctx, const std::string &task) {
    std::vector<ArchiveEntry> out;
    const int f = ctx.failures.contains(task) ? ctx.failures.at(task) : 0;
    for (const auto &e : ctx.archive.entries) {
        auto it = e.retry_dict.find(task);
        int budget = it == e.retry_dict.end() ? 1 : it->second;
        if (budget > f && prefix_consistent(ctx, e))
            out.push_back(e);
    }
    return out;
}

std::vector<ArchiveEntry> reduce_ps_psucc(const ExecutionContext &ctx, double new_p_succ) {
    std::vector<ArchiveEntry> out;
    for (const auto &e : ctx.archive.entries) {
        if (!prefix_consistent(ctx, e))
            continue;
        double p = ctx.config.c2_mode == C2Mode::PlanLevel ? e.objectives.success_probability
                                                           : remaining_success_probability(ctx, e);
        if (p >= new_p_succ)
            out.push_back(e);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> remaining_allocations(const ExecutionContext &ctx) {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = ctx.cursor; i < ctx.plan.total_order.size(); ++i) {
        const PlanStep &s = ctx.plan.total_order[i];
        if (s.kind == ActionKind::Do && !ctx.done.contains(s.task))
            out.emplace_back(s.agent, s.task);
    }
    return out;
}

std::vector<ArchiveEntry> reduce_ps_passign(const ExecutionContext &ctx, double new_gamma) {
    for (const auto &[agent, task] : remaining_allocations(ctx))
        if (ctx.spec.p_success(agent, task) < new_gamma)
            return {};
    std::vector<ArchiveEntry> out;
    for (const auto &e : ctx.archive.entries)
        if (prefix_consistent(ctx, e))
            out.push_back(e);
    return out;
}

PtaskDecision reduce_ps_ptask(const ExecutionContext &ctx, const std::string &agent, const std::string &task,
                              double new_p) {
    auto rem = remaining_allocations(ctx);
    if (std::find(rem.begin(), rem.end(), std::make_pair(agent, task)) == rem.end())
        return PtaskDecision::Unchanged;
    if (new_p <= ctx.spec.constraints.gamma)
        return PtaskDecision::Empty;
    return PtaskDecision::Rebuild;
}

const ArchiveEntry &select_new_plan(const std::vector<ArchiveEntry> &reduced) {
    if (reduced.empty())
        throw ContractViolation("no plan to select from an empty set");
    const ArchiveEntry *best = nullptr;
    for (const auto &e : reduced) {
        if (!best) {
            best = &e;
            continue;
        }
        const auto &a = e.objectives, &b = best->objectives;
        if (a.feasible != b.feasible) {
            if (a.feasible)
                best = &e;
            continue;
        }
        if (a.expected_cost != b.expected_cost) {
            if (a.expected_cost < b.expected_cost)
                best = &e;
            continue;
        }
        if (a.success_probability != b.success_probability) {
            if (a.success_probability > b.success_probability)
                best = &e;
            continue;
        }
        if (e.genotype < best->genotype)
            best = &e;
    }
    return *best;
}

AdaptationOutcome adapt(ExecutionContext &ctx, const Change &change) {
    if (change.time < ctx.clock)
        throw ContractViolation("change at time " + std::to_string(change.time) + " precedes the clock " +
                                std::to_string(ctx.clock));
    ctx.clock = change.time;
    switch (change.type) {
    case ChangeType::C1:
        break;
    case ChangeType::C2:
        ctx.spec.constraints.p_succ = change.value;
        break;
    case ChangeType::C3:
        ctx.spec.constraints.gamma = change.value;
        break;
    case ChangeType::C4:
        ctx.spec.set_override(change.agent, change.task, change.value);
        break;
    }

    AdaptationOutcome out;
    if (ctx.finished()) {
        out.detail = "mission already complete";
        return out;
    }

    std::vector<ArchiveEntry> reduced;
    switch (change.type) {
    case ChangeType::C1:
        reduced = reduce_ps_tf(ctx, change.task);
        break;
    case ChangeType::C2:
        reduced = reduce_ps_psucc(ctx, change.value);
        break;
    case ChangeType::C3:
        reduced = reduce_ps_passign(ctx, change.value);
        break;
    case ChangeType::C4:
        switch (reduce_ps_ptask(ctx, change.agent, change.task, change.value)) {
        case PtaskDecision::Unchanged:
            out.reduced_set_size = ctx.archive.entries.size();
            out.detail = "task not pending for this agent";
            return out;
        case PtaskDecision::Rebuild:
            if (resynthesize(ctx, out))
                return out;
            out.detail = "re-synthesis found no feasible assignment";
            replan(ctx, out);
            return out;
        case PtaskDecision::Empty:
            out.detail = "probability at or below the allocation threshold";
            replan(ctx, out);
            return out;
        }
        break;
    }

    out.reduced_set_size = reduced.size();
    for (const auto &e : reduced) {
        if (is_deployed(ctx, e)) {
            out.detail = "deployed plan still verified";
            return out;
        }
    }
    if (!reduced.empty()) {
        out.level = AdaptationLevel::A1;
        deploy_entry(ctx, select_new_plan(reduced), out);
        out.new_plan = ctx.plan;
        out.detail = "switched to an archived plan";
        return out;
    }
    out.detail = "no archived plan survives";
    replan(ctx, out);
    return out;
}

namespace {

Change parse_change(const json &j, const std::string &path) {
    if (!j.is_object())
        throw SpecError(path, "expected an object");
    static const std::set<std::string> allowed{"time", "type", "task", "agent", "p_succ", "gamma", "p_success"};
    for (const auto &[k, v] : j.items())
        if (!allowed.contains(k))
            throw SpecError(path + "." + k, "unknown key");
    auto get_num = [&](const char *key) {
        if (!j.contains(key) || !j[key].is_number())
            throw SpecError(path + "." + key, "expected a number");
        double v = j[key].get<double>();
        if (v < 0.0 || v > 1.0)
            throw SpecError(path + "." + key, "probability outside [0, 1]");
        return v;
    };
    auto get_str = [&](const char *key) {
        if (!j.contains(key) || !j[key].is_string())
            throw SpecError(path + "." + key, "expected a string");
        return j[key].get<std::string>();
    };
    Change c;
    if (!j.contains("time") || !j["time"].is_number_integer() || j["time"].get<int>() < 0)
        throw SpecError(path + ".time", "expected a non-negative integer");
    c.time = j["time"].get<int>();
    std::string type = get_str("type");
    if (type == "C1") {
        c.type = ChangeType::C1;
        c.task = get_str("task");
    } else if (type == "C2") {
        c.type = ChangeType::C2;
        c.value = get_num("p_succ");
    } else if (type == "C3") {
        c.type = ChangeType::C3;
        c.value = get_num("gamma");
    } else if (type == "C4") {
        c.type = ChangeType::C4;
        c.agent = get_str("agent");
        c.task = get_str("task");
        c.value = get_num("p_success");
    } else {
        throw SpecError(path + ".type", "unknown change type '" + type + "'");
    }
    return c;
}

json change_json(const Change &c) {
    json j{{"type", to_string(c.type)}, {"time", c.time}};
    if (!c.agent.empty())
        j["agent"] = c.agent;
    if (!c.task.empty())
        j["task"] = c.task;
    if (c.type == ChangeType::C2)
        j["p_succ"] = c.value;
    else if (c.type == ChangeType::C3)
        j["gamma"] = c.value;
    else if (c.type == ChangeType::C4)
        j["p_success"] = c.value;
    return j;
}

} // namespace

Scenario parse_scenario(const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw SpecError("", std::string("malformed scenario JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw SpecError("", "scenario must be an object");
    static const std::set<std::string> allowed{"changes", "unscripted_outcomes", "deploy", "synthesis"};
    for (const auto &[k, v] : doc.items())
        if (!allowed.contains(k))
            throw SpecError(k, "unknown key");
    Scenario s;
    if (doc.contains("changes")) {
        if (!doc["changes"].is_array())
            throw SpecError("changes", "expected an array");
        for (std::size_t i = 0; i < doc["changes"].size(); ++i)
            s.changes.push_back(parse_change(doc["changes"][i], "changes[" + std::to_string(i) + "]"));
    }
    std::stable_sort(s.changes.begin(), s.changes.end(),
                     [](const Change &a, const Change &b) { return a.time < b.time; });
    for (std::size_t i = 1; i < s.changes.size(); ++i)
        if (s.changes[i].time == s.changes[i - 1].time)
            throw ContractViolation("two changes at time " + std::to_string(s.changes[i].time) +
                                    "; at most one change per time unit");
    if (doc.contains("unscripted_outcomes")) {
        const auto &v = doc["unscripted_outcomes"];
        if (v == "sample")
            s.unscripted = Scenario::Outcomes::Sample;
        else if (v == "success")
            s.unscripted = Scenario::Outcomes::Success;
        else
            throw SpecError("unscripted_outcomes", "expected \"sample\" or \"success\"");
    }
    if (doc.contains("deploy")) {
        if (!doc["deploy"].is_object())
            throw SpecError("deploy", "expected an object of task budgets");
        for (const auto &[k, v] : doc["deploy"].items()) {
            if (!v.is_number_integer() || v.get<int>() < 1)
                throw SpecError("deploy." + k, "expected a positive integer");
            s.deploy[k] = v.get<int>();
        }
    }
    if (doc.contains("synthesis")) {
        const auto &j = doc["synthesis"];
        if (!j.is_object())
            throw SpecError("synthesis", "expected an object");
        GaConfig g;
        for (const auto &[k, v] : j.items()) {
            if (!v.is_number())
                throw SpecError("synthesis." + k, "expected a number");
            if (k == "population")
                g.population = v.get<int>();
            else if (k == "evaluations")
                g.evaluations = v.get<int>();
            else if (k == "seed")
                g.seed = v.get<std::uint64_t>();
            else if (k == "crossover_rate")
                g.crossover_rate = v.get<double>();
            else if (k == "mutation_rate")
                g.mutation_rate = v.get<double>();
            else
                throw SpecError("synthesis." + k, "unknown key");
        }
        s.synthesis = g;
    }
    return s;
}

Scenario load_scenario(const std::string &path) { return parse_scenario(read_text_file(path)); }

std::string Trace::to_jsonl() const {
    std::string out;
    for (const auto &e : events) {
        json j;
        j["time"] = e.time;
        switch (e.kind) {
        case TraceEvent::Kind::Step:
            j["event"] = "step";
            j["action"] = e.action;
            j["outcome"] = e.outcome;
            break;
        case TraceEvent::Kind::Adaptation:
            j["event"] = "adaptation";
            j["change"] = change_json(*e.change);
            if (e.adaptation) {
                j["level"] = to_string(e.adaptation->level);
                j["stages_rerun"] = e.adaptation->stages_rerun;
                j["reduced_set_size"] = e.adaptation->reduced_set_size;
                if (e.adaptation->new_assignment)
                    j["retries"] = *e.adaptation->new_assignment;
            } else {
                j["level"] = "unrecoverable";
            }
            break;
        case TraceEvent::Kind::Summary:
            j["event"] = "summary";
            j["status"] = e.outcome;
            j["stage_reruns"] = stage_reruns;
            break;
        }
        j["cost"] = e.cost;
        if (!e.message.empty())
            j["message"] = e.message;
        out += j.dump() + "\n";
    }
    return out;
}

ExecutionContext deploy(const ProblemSpec &spec, const Plan &plan, const ParetoArchive &archive,
                        const ParametricPlanModel &model, const Scenario &scenario, const AdaptationConfig &cfg) {
    std::vector<ArchiveEntry> matching;
    for (const auto &e : archive.entries) {
        bool ok = true;
        for (const auto &[task, budget] : scenario.deploy) {
            auto it = e.retry_dict.find(task);
            if (it == e.retry_dict.end() || it->second != budget)
                ok = false;
        }
        if (ok)
            matching.push_back(e);
    }
    if (matching.empty())
        throw ContractViolation(archive.empty() ? "archive is empty: " + archive.diagnostic
                                                : "no archived assignment matches the deploy pins");
    return make_context(spec, plan, archive, model, select_new_plan(matching).retry_dict, cfg);
}

Trace simulate(ExecutionContext ctx, const Scenario &scenario, std::uint64_t seed, int max_time,
               const AdaptationObserver &observer) {
    Trace tr;
    std::mt19937_64 rng(seed);
    for (const char *s : {"S0", "S1", "S2", "S3", "S4"})
        tr.stage_reruns[s] = 0;
    std::size_t next = 0;
    const auto &changes = scenario.changes;
    bool unrecoverable = false;

    auto run_adapt = [&](const Change &c) {
        TraceEvent ev;
        ev.kind = TraceEvent::Kind::Adaptation;
        ev.time = c.time;
        ev.change = c;
        try {
            AdaptationOutcome out = adapt(ctx, c);
            for (const auto &s : out.stages_rerun)
                ++tr.stage_reruns[s];
            ev.message = out.detail;
            if (observer)
                observer(ctx, c, out, tr.executed);
            ev.adaptation = out;
            tr.adaptations.push_back(std::move(out));
        } catch (const NoPlanExists &e) {
            ev.message = e.what();
            unrecoverable = true;
        } catch (const MissionUnrecoverable &e) {
            ev.message = e.what();
            unrecoverable = true;
        }
        ev.cost = ctx.cost;
        tr.events.push_back(std::move(ev));
        return !unrecoverable;
    };

    int t = ctx.clock;
    while (!ctx.finished() && t < max_time) {
        ctx.clock = t;
        while (next < changes.size() && changes[next].time < t)
            ++next; // changes scheduled before the harness started
        const PlanStep step = ctx.plan.total_order[ctx.cursor];
        const bool scripted_fail = next < changes.size() && changes[next].time == t &&
                                   changes[next].type == ChangeType::C1;
        if (scripted_fail && (step.kind != ActionKind::Do || step.task != changes[next].task))
            throw ContractViolation("scripted failure of " + changes[next].task + " at time " + std::to_string(t) +
                                    " does not match the scheduled step " + step.to_string());
        TraceEvent ev;
        ev.time = t;
        ev.action = step.to_string();
        bool failed = false;
        if (step.kind == ActionKind::Move) {
            ctx.location[step.agent] = step.to;
            tr.executed.push_back(step);
            ctx.cost += ctx.spec.distance(step.from, step.to).value_or(0.0);
            ++ctx.cursor;
            ev.outcome = "moved";
        } else if (step.kind == ActionKind::Do) {
            ctx.cost += ctx.spec.task_cost(step.agent, step.task);
            bool ok;
            if (scripted_fail)
                ok = false;
            else if (scenario.unscripted == Scenario::Outcomes::Success)
                ok = true;
            else
                ok = uniform01(rng) < ctx.spec.p_success(step.agent, step.task);
            if (ok) {
                ctx.done.insert(step.task);
                tr.executed.push_back(step);
                ++ctx.cursor;
                ev.outcome = "success";
            } else {
                ++ctx.failures[step.task];
                ctx.failure_agent[step.task] = step.agent;
                ev.outcome = "failure";
                failed = true;
            }
        } else {
            ++ctx.cursor;
            ev.outcome = "waited";
        }
        ev.cost = ctx.cost;
        tr.events.push_back(std::move(ev));

        if (failed) {
            Change c{ChangeType::C1, t, step.agent, step.task, 0.0};
            if (scripted_fail)
                c = changes[next++];
            if (!run_adapt(c))
                break;
        }
        bool ok = true;
        while (ok && next < changes.size() && changes[next].time == t)
            ok = run_adapt(changes[next++]);
        if (!ok)
            break;
        ++t;
    }
    // Changes after completion are still monitored.
    while (!unrecoverable && ctx.finished() && next < changes.size())
        run_adapt(changes[next++]);

    tr.completed = ctx.finished() && !unrecoverable;
    tr.cost = ctx.cost;
    tr.time = t;
    tr.final_plan = ctx.plan;
    TraceEvent sum;
    sum.kind = TraceEvent::Kind::Summary;
    sum.time = t;
    sum.cost = ctx.cost;
    sum.outcome = tr.completed ? "completed" : (unrecoverable ? "unrecoverable" : "timeout");
    tr.events.push_back(std::move(sum));
    return tr;
}

} // namespace hytask
