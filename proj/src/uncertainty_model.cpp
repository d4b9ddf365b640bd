#include "hytask/uncertainty_model.hpp"

#include "hytask/error.hpp"
#include "hytask/util.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace hytask {

std::size_t ParametricPlanModel::space_size() const {
    std::size_t n = 1;
    for (const auto &s : slots) {
        std::size_t r = static_cast<std::size_t>(std::max(0, s.range_size()));
        if (r != 0 && n > std::numeric_limits<std::size_t>::max() / r)
            return std::numeric_limits<std::size_t>::max();
        n *= r;
    }
    return n;
}

namespace {

ParametricPlanModel build_from_steps(const ProblemSpec &spec, const std::vector<PlanStep> &steps,
                                     const std::map<std::string, int> &failures, bool charge_exhaust) {
    ParametricPlanModel model;
    model.p_succ = spec.constraints.p_succ;
    model.charge_exhaust = charge_exhaust;
    std::map<std::string, AgentChain> chains;
    for (const auto &s : steps) {
        if (s.kind == ActionKind::Wait)
            continue;
        AgentChain &c = chains[s.agent];
        c.agent = s.agent;
        ChainAction a;
        a.step = s;
        if (s.kind == ActionKind::Move) {
            auto d = spec.distance(s.from, s.to);
            if (!d)
                throw ModelError("plan moves along a missing path: " + s.to_string());
            a.reward = *d;
        } else {
            const TaskInstance *t = spec.find_task(s.task);
            if (!t || !spec.find_agent(s.agent) || !spec.capability(s.agent, t->group))
                throw ModelError("plan references an unknown capability: " + s.to_string());
            a.reward = spec.task_cost(s.agent, s.task);
            a.p_success = spec.p_success(s.agent, s.task);
        }
        c.actions.push_back(std::move(a));
    }
    for (auto &[agent, chain] : chains) {
        for (auto &a : chain.actions) {
            if (a.step.kind != ActionKind::Do)
                continue;
            int retry = spec.max_retries(agent, a.step.task);
            if (retry <= 0)
                continue;
            auto it = failures.find(a.step.task);
            int f = it == failures.end() ? 0 : it->second;
            a.slot = static_cast<int>(model.slots.size());
            chain.slots.push_back(a.slot);
            model.slots.push_back({agent, a.step.task, f + 1, retry, f});
        }
        model.chains.push_back(std::move(chain));
    }
    return model;
}

} // namespace

ParametricPlanModel build_parametric_model(const ProblemSpec &spec, const Plan &plan, bool charge_exhaust) {
    return build_from_steps(spec, plan.total_order, {}, charge_exhaust);
}

ParametricPlanModel build_suffix_model(const ProblemSpec &spec, const Plan &plan, std::size_t cursor,
                                       const std::map<std::string, int> &failures, bool charge_exhaust) {
    if (cursor > plan.total_order.size())
        throw ContractViolation("cursor beyond the end of the plan");
    std::vector<PlanStep> rest(plan.total_order.begin() + static_cast<std::ptrdiff_t>(cursor), plan.total_order.end());
    std::map<std::string, int> pending;
    for (const auto &s : rest)
        if (s.kind == ActionKind::Do) {
            auto it = failures.find(s.task);
            if (it != failures.end() && it->second > 0)
                pending[s.task] = it->second;
        }
    return build_from_steps(spec, rest, pending, charge_exhaust);
}

void check_assignment(const ParametricPlanModel &model, const RetryAssignment &x) {
    if (x.size() != model.slots.size())
        throw ContractViolation("assignment has " + std::to_string(x.size()) + " entries, model has " +
                                std::to_string(model.slots.size()) + " retry slots");
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto &s = model.slots[i];
        if (x[i] < s.lower || x[i] > s.upper)
            throw ContractViolation("budget " + std::to_string(x[i]) + " for " + s.task + " outside [" +
                                    std::to_string(s.lower) + "," + std::to_string(s.upper) + "]");
    }
}

namespace {

Dtmc instantiate_compact(const ParametricPlanModel &model, const AgentChain &chain, const RetryAssignment &x) {
    DtmcBuilder b({"cost"});
    const std::size_t n = chain.n_act();
    // First state of each action; Do actions with a slot own budget+1-f states (x = f..budget).
    std::vector<std::size_t> first(n + 1);
    std::vector<int> lo(n, 0), hi(n, 0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        first[i] = count;
        const ChainAction &a = chain.actions[i];
        if (a.slot >= 0) {
            lo[i] = model.slots[a.slot].initial_failures;
            hi[i] = x[a.slot];
        }
        count += static_cast<std::size_t>(hi[i] - lo[i] + 1);
    }
    first[n] = count;
    const std::size_t success = count, fail = count + 1;
    for (std::size_t i = 0; i < n; ++i)
        for (int v = lo[i]; v <= hi[i]; ++v)
            b.add_state("c=" + std::to_string(i) + ",x=" + std::to_string(v));
    b.add_state("c=" + std::to_string(n));
    b.add_state("c=" + std::to_string(n + 1));
    b.add_label("success", success);
    b.add_label("done", success);
    b.add_label("done", fail);
    b.set_initial(n == 0 ? success : first[0]);

    for (std::size_t i = 0; i < n; ++i) {
        const ChainAction &a = chain.actions[i];
        const std::size_t next = first[i + 1];
        if (a.step.kind == ActionKind::Move) {
            b.add_transition(first[i], next, 1.0, {a.reward});
            continue;
        }
        const double q = 1.0 - a.p_success;
        if (a.slot < 0) {
            // Single Bernoulli attempt.
            b.add_transition(first[i], next, a.p_success, {a.reward});
            b.add_transition(first[i], fail, q, {a.reward});
            continue;
        }
        for (int v = lo[i]; v < hi[i]; ++v) {
            std::size_t s = first[i] + static_cast<std::size_t>(v - lo[i]);
            b.add_transition(s, next, a.p_success, {a.reward});
            b.add_transition(s, s + 1, q, {a.reward});
        }
        std::size_t exhausted = first[i] + static_cast<std::size_t>(hi[i] - lo[i]);
        b.add_transition(exhausted, fail, 1.0, {model.charge_exhaust ? a.reward : 0.0});
    }
    b.add_transition(success, success, 1.0);
    b.add_transition(fail, fail, 1.0);
    return b.build();
}

Dtmc instantiate_full(const ParametricPlanModel &model, const AgentChain &chain, const RetryAssignment &x) {
    // Valuation: c followed by one counter per slot of this chain.
    const std::size_t n = chain.n_act();
    const std::size_t k = chain.slots.size();
    std::vector<int> pos_of_slot(model.slots.size(), -1);
    for (std::size_t j = 0; j < k; ++j)
        pos_of_slot[chain.slots[j]] = static_cast<int>(j);

    DtmcBuilder b({"cost"});
    b.declare_label("success");
    b.declare_label("done");
    std::map<std::vector<int>, std::size_t> index;
    std::vector<std::vector<int>> states;
    auto intern = [&](const std::vector<int> &v) {
        auto [it, inserted] = index.emplace(v, states.size());
        if (inserted) {
            states.push_back(v);
            std::string val = "c=" + std::to_string(v[0]);
            for (std::size_t j = 0; j < k; ++j)
                val += ",x_" + model.slots[chain.slots[j]].task + "=" + std::to_string(v[j + 1]);
            b.add_state(val);
        }
        return it->second;
    };
    std::vector<int> init(k + 1, 0);
    for (std::size_t j = 0; j < k; ++j)
        init[j + 1] = model.slots[chain.slots[j]].initial_failures;
    b.set_initial(intern(init));
    for (std::size_t s = 0; s < states.size(); ++s) {
        const std::vector<int> cur = states[s];
        const std::size_t c = static_cast<std::size_t>(cur[0]);
        if (c >= n) {
            if (c == n)
                b.add_label("success", s);
            b.add_label("done", s);
            b.add_transition(s, s, 1.0);
            continue;
        }
        const ChainAction &a = chain.actions[c];
        auto advance = cur;
        advance[0] = static_cast<int>(c + 1);
        auto failed = cur;
        failed[0] = static_cast<int>(n + 1);
        if (a.step.kind == ActionKind::Move) {
            b.add_transition(s, intern(advance), 1.0, {a.reward});
            continue;
        }
        const double q = 1.0 - a.p_success;
        if (a.slot < 0) {
            if (a.p_success > 0.0)
                b.add_transition(s, intern(advance), a.p_success, {a.reward});
            if (q > 0.0)
                b.add_transition(s, intern(failed), q, {a.reward});
            continue;
        }
        const std::size_t j = static_cast<std::size_t>(pos_of_slot[a.slot]) + 1;
        if (cur[j] < x[a.slot]) {
            auto retry = cur;
            retry[j] += 1;
            if (a.p_success > 0.0)
                b.add_transition(s, intern(advance), a.p_success, {a.reward});
            if (q > 0.0)
                b.add_transition(s, intern(retry), q, {a.reward});
        } else {
            b.add_transition(s, intern(failed), 1.0, {model.charge_exhaust ? a.reward : 0.0});
        }
    }
    return b.build();
}

} // namespace

std::vector<Dtmc> instantiate(const ParametricPlanModel &model, const RetryAssignment &x, Encoding encoding) {
    check_assignment(model, x);
    std::vector<Dtmc> out;
    out.reserve(model.chains.size());
    for (const auto &c : model.chains)
        out.push_back(encoding == Encoding::Compact ? instantiate_compact(model, c, x) : instantiate_full(model, c, x));
    return out;
}

MissionMetrics evaluate_metrics(const ParametricPlanModel &model, const RetryAssignment &x,
                                const SolverOptions &opts) {
    return factored_mission_metrics(instantiate(model, x), opts);
}

std::map<std::string, int> to_retry_dict(const ParametricPlanModel &model, const RetryAssignment &x) {
    check_assignment(model, x);
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < x.size(); ++i)
        out[model.slots[i].task] = x[i];
    return out;
}

RetryAssignment from_retry_dict(const ParametricPlanModel &model, const std::map<std::string, int> &dict) {
    RetryAssignment x;
    for (const auto &s : model.slots) {
        auto it = dict.find(s.task);
        if (it == dict.end())
            throw ContractViolation("retry dictionary lacks task " + s.task);
        x.push_back(it->second);
    }
    check_assignment(model, x);
    return x;
}

namespace {

std::string var_c(const AgentChain &c) { return "c_" + c.agent; }
std::string var_x(const RetrySlot &s) { return "x_" + s.task; }
std::string var_bound(const RetrySlot &s) { return "x_hat_" + s.task; }

} // namespace

std::string export_model_source(const ParametricPlanModel &model, const std::optional<RetryAssignment> &x) {
    if (model.chains.empty())
        throw ModelError("model has no agents");
    if (x)
        check_assignment(model, *x);
    std::ostringstream o;
    o << "dtmc\n\n";
    o << "// attempt budget per task\n";
    for (std::size_t i = 0; i < model.slots.size(); ++i) {
        const auto &s = model.slots[i];
        if (x)
            o << "const int " << var_bound(s) << " = " << (*x)[i] << ";\n";
        else
            o << "evolve int " << var_bound(s) << " [" << s.lower << ".." << s.upper << "];\n";
    }
    o << "\n";
    for (const auto &c : model.chains) {
        o << "formula Final_" << c.agent << " = " << var_c(c) << "=" << c.n_act() << ";\n";
        o << "formula Fail_" << c.agent << " = " << var_c(c) << "=" << c.n_act() + 1 << ";\n";
    }
    std::string final_all, done_all;
    for (std::size_t i = 0; i < model.chains.size(); ++i) {
        const auto &c = model.chains[i];
        final_all += (i ? " & " : "") + std::string("Final_") + c.agent;
        done_all += (i ? " & " : "") + std::string("(Final_") + c.agent + " | Fail_" + c.agent + ")";
    }
    o << "formula Final = " << final_all << ";\n";
    o << "formula Fail = !Final & " << done_all << ";\n\n";

    std::ostringstream rewards;
    for (const auto &c : model.chains) {
        const std::string cv = var_c(c);
        o << "module " << c.agent << "\n";
        o << "  " << cv << " : [0.." << c.n_act() + 1 << "] init 0;\n";
        for (int si : c.slots) {
            const auto &s = model.slots[si];
            o << "  " << var_x(s) << " : [0.." << s.upper << "] init " << s.initial_failures << ";\n";
        }
        for (std::size_t i = 0; i < c.n_act(); ++i) {
            const ChainAction &a = c.actions[i];
            const std::string lab = c.agent + "_" + std::to_string(i);
            const std::string at = cv + "=" + std::to_string(i);
            const std::string next = "(" + cv + "'=" + std::to_string(i + 1) + ")";
            const std::string fail = "(" + cv + "'=" + std::to_string(c.n_act() + 1) + ")";
            o << "  // " << a.step.to_string() << "\n";
            if (a.step.kind == ActionKind::Move) {
                o << "  [" << lab << "] " << at << " -> " << next << ";\n";
                rewards << "  [" << lab << "] " << at << " : " << format_number(a.reward) << ";\n";
            } else if (a.slot < 0) {
                o << "  [" << lab << "] " << at << " -> " << format_probability(a.p_success) << ":" << next << " + "
                  << format_probability(1.0 - a.p_success) << ":" << fail << ";\n";
                rewards << "  [" << lab << "] " << at << " : " << format_number(a.reward) << ";\n";
            } else {
                const auto &s = model.slots[a.slot];
                const std::string xv = var_x(s), bound = var_bound(s);
                o << "  [" << lab << "] " << at << " & " << xv << "<" << bound << " -> " << format_probability(a.p_success)
                  << ":" << next << " + " << format_probability(1.0 - a.p_success) << ":(" << xv << "'=" << xv
                  << "+1);\n";
                o << "  [" << lab << "_exhaust] " << at << " & " << xv << ">=" << bound << " -> " << fail << ";\n";
                rewards << "  [" << lab << "] " << at << " & " << xv << "<" << bound << " : " << format_number(a.reward)
                        << ";\n";
                if (model.charge_exhaust)
                    rewards << "  [" << lab << "_exhaust] " << at << " & " << xv << ">=" << bound << " : "
                            << format_number(a.reward) << ";\n";
            }
        }
        o << "  [" << c.agent << "_end] " << cv << ">=" << c.n_act() << " -> true;\n";
        o << "endmodule\n\n";
    }
    o << "label \"success\" = Final;\n";
    o << "label \"done\" = Final | Fail;\n\n";
    o << "rewards \"cost\"\n" << rewards.str() << "endrewards\n";
    return o.str();
}

std::string export_properties(const ParametricPlanModel &model) {
    if (model.chains.empty())
        throw ModelError("model has no agents");
    std::ostringstream o;
    o << "// mission success floor\n";
    o << "P>=" << format_number(model.p_succ) << " [ F \"success\" ]\n\n";
    o << "// minimise expected cost\n";
    o << "R{\"cost\"}=? [ F \"done\" ]\n\n";
    o << "// maximise success probability\n";
    o << "P=? [ F \"success\" ]\n";
    return o.str();
}

} // namespace hytask
