#include "hytask/world.hpp"

#include "hytask/error.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace hytask {

PlanStep PlanStep::move(std::string agent, std::string from, std::string to) {
    return {ActionKind::Move, std::move(agent), std::move(from), std::move(to), {}};
}

PlanStep PlanStep::act(std::string agent, std::string task, std::string location) {
    return {ActionKind::Do, std::move(agent), location, location, std::move(task)};
}

PlanStep PlanStep::wait(std::string agent) {
    return {ActionKind::Wait, std::move(agent), {}, {}, {}};
}

std::string PlanStep::to_string() const {
    switch (kind) {
    case ActionKind::Move:
        return "Move(" + agent + "," + from + "," + to + ")";
    case ActionKind::Do:
        return "Do(" + agent + "," + task + ")";
    case ActionKind::Wait:
        break;
    }
    return "Wait(" + agent + ")";
}

PlanStep parse_plan_step(const std::string &text, const ProblemSpec &spec) {
    auto open = text.find('(');
    if (open == std::string::npos || text.back() != ')')
        throw SpecError("", "malformed action '" + text + "'");
    std::string head = text.substr(0, open);
    std::vector<std::string> args;
    std::string cur;
    for (std::size_t i = open + 1; i + 1 < text.size(); ++i) {
        char c = text[i];
        if (c == ',') {
            args.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    args.push_back(cur);
    if (head == "Move" && args.size() == 3)
        return PlanStep::move(args[0], args[1], args[2]);
    if (head == "Do" && (args.size() == 2 || args.size() == 3)) {
        const TaskInstance *t = spec.find_task(args[1]);
        if (!t)
            throw SpecError("", "unknown task in action '" + text + "'");
        return PlanStep::act(args[0], args[1], t->location);
    }
    if (head == "Wait" && args.size() == 1)
        return PlanStep::wait(args[0]);
    throw SpecError("", "malformed action '" + text + "'");
}

namespace {

int index_of(const std::vector<std::string> &ids, std::string_view id) {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id)
        return -1;
    return static_cast<int>(it - ids.begin());
}

} // namespace

Grounding::Grounding(const ProblemSpec &spec) : spec_(spec) {
    spec_.canonicalize();
    for (const auto &a : spec_.agents)
        agents_.push_back(a.id);
    for (const auto &l : spec_.locations)
        locations_.push_back(l.id);
    for (const auto &t : spec_.task_instances())
        tasks_.push_back(t.id);
    gamma_ = spec_.constraints.gamma;

    const std::size_t nl = locations_.size();
    const double inf = std::numeric_limits<double>::infinity();
    edge_.assign(nl * nl, -1.0);
    adj_.assign(nl, {});
    for (const auto &p : spec_.paths) {
        int a = location_index(p.start), b = location_index(p.end);
        if (a < 0 || b < 0)
            throw SpecError("paths", "path references unknown location");
        edge_[a * nl + b] = edge_[b * nl + a] = p.distance;
        adj_[a].push_back(b);
        adj_[b].push_back(a);
    }
    for (auto &n : adj_)
        std::sort(n.begin(), n.end());

    // Dijkstra from every location.
    dist_.assign(nl * nl, inf);
    for (std::size_t src = 0; src < nl; ++src) {
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist_[src * nl + src] = 0.0;
        pq.push({0.0, static_cast<int>(src)});
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist_[src * nl + u])
                continue;
            for (int v : adj_[u]) {
                double nd = d + edge(u, v);
                if (nd < dist_[src * nl + v]) {
                    dist_[src * nl + v] = nd;
                    pq.push({nd, v});
                }
            }
        }
    }

    const std::size_t nt = tasks_.size();
    task_loc_.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        task_loc_[t] = location_index(spec_.find_task(tasks_[t])->location);
        if (task_loc_[t] < 0)
            throw SpecError("tasks", "task '" + tasks_[t] + "' has unknown location");
    }
    p_.assign(agents_.size() * nt, 0.0);
    cost_.assign(agents_.size() * nt, 0.0);
    retries_.assign(agents_.size() * nt, 0);
    for (std::size_t a = 0; a < agents_.size(); ++a) {
        for (std::size_t t = 0; t < nt; ++t) {
            p_[a * nt + t] = spec_.p_success(agents_[a], tasks_[t]);
            cost_[a * nt + t] = spec_.task_cost(agents_[a], tasks_[t]);
            retries_[a * nt + t] = spec_.max_retries(agents_[a], tasks_[t]);
        }
    }
}

int Grounding::agent_index(std::string_view id) const { return index_of(agents_, id); }
int Grounding::location_index(std::string_view id) const { return index_of(locations_, id); }
int Grounding::task_index(std::string_view id) const { return index_of(tasks_, id); }

Action Grounding::ground(const PlanStep &step) const {
    Action a;
    a.kind = step.kind;
    a.agent = agent_index(step.agent);
    if (a.agent < 0)
        throw ContractViolation("unknown agent in " + step.to_string());
    if (step.kind == ActionKind::Move) {
        a.from = location_index(step.from);
        a.to = location_index(step.to);
        if (a.from < 0 || a.to < 0)
            throw ContractViolation("unknown location in " + step.to_string());
    } else if (step.kind == ActionKind::Do) {
        a.task = task_index(step.task);
        if (a.task < 0)
            throw ContractViolation("unknown task in " + step.to_string());
        a.from = a.to = task_loc_[a.task];
    }
    return a;
}

PlanStep Grounding::name(const Action &action) const {
    switch (action.kind) {
    case ActionKind::Move:
        return PlanStep::move(agents_[action.agent], locations_[action.from], locations_[action.to]);
    case ActionKind::Do:
        return PlanStep::act(agents_[action.agent], tasks_[action.task], locations_[action.to]);
    case ActionKind::Wait:
        break;
    }
    return PlanStep::wait(agents_[action.agent]);
}

WorldState initial_state(const Grounding &g) {
    WorldState s;
    s.empty.assign(g.num_locations(), 1);
    for (const auto &a : g.spec().agents) {
        int l = g.location_index(a.start_location);
        s.agent_loc.push_back(l);
        s.empty[l] = 0;
    }
    s.done.assign(g.num_tasks(), 0);
    for (const auto &t : g.spec().completed_tasks) {
        int i = g.task_index(t);
        if (i >= 0)
            s.done[i] = 1;
    }
    return s;
}

bool is_enabled(const Grounding &g, const WorldState &s, const Action &a) {
    if (a.agent < 0 || a.agent >= static_cast<int>(g.num_agents()))
        return false;
    switch (a.kind) {
    case ActionKind::Move:
        return a.from >= 0 && a.to >= 0 && a.from != a.to && g.edge(a.from, a.to) > 0.0 &&
               s.agent_loc[a.agent] == a.from && s.empty[a.to];
    case ActionKind::Do:
        return a.task >= 0 && a.task < static_cast<int>(g.num_tasks()) && !s.done[a.task] &&
               g.task_location(a.task) == a.to && s.agent_loc[a.agent] == a.to && g.eligible(a.agent, a.task);
    case ActionKind::Wait:
        return true;
    }
    return false;
}

std::vector<Action> enabled_actions(const Grounding &g, const WorldState &s) {
    std::vector<Action> out;
    const int na = static_cast<int>(g.num_agents());
    for (int a = 0; a < na; ++a) {
        for (int t = 0; t < static_cast<int>(g.num_tasks()); ++t) {
            if (!s.done[t] && g.task_location(t) == s.agent_loc[a] && g.eligible(a, t))
                out.push_back({ActionKind::Do, a, s.agent_loc[a], s.agent_loc[a], t});
        }
    }
    for (int a = 0; a < na; ++a) {
        int from = s.agent_loc[a];
        for (int to : g.neighbours(from)) {
            if (s.empty[to])
                out.push_back({ActionKind::Move, a, from, to, -1});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

WorldState apply(const Grounding &g, const WorldState &s, const Action &a) {
    if (!is_enabled(g, s, a))
        throw ContractViolation("action not enabled: " + g.name(a).to_string());
    WorldState n = s;
    if (a.kind == ActionKind::Move) {
        n.agent_loc[a.agent] = a.to;
        n.empty[a.from] = 1;
        n.empty[a.to] = 0;
        n.travel_cost += g.edge(a.from, a.to);
    } else if (a.kind == ActionKind::Do) {
        n.done[a.task] = 1;
    }
    return n;
}

bool is_goal(const Grounding &, const WorldState &s) {
    return std::all_of(s.done.begin(), s.done.end(), [](char d) { return d != 0; });
}

} // namespace hytask
