#include "hytask/planner.hpp"

#include "hytask/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

namespace hytask {

using nlohmann::json;

namespace {

std::vector<std::string> footprint(const PlanStep &s) {
    if (s.kind == ActionKind::Move)
        return {s.from, s.to};
    if (s.kind == ActionKind::Do)
        return {s.to};
    return {};
}

bool intersects(const std::vector<std::string> &a, const std::vector<std::string> &b) {
    for (const auto &x : a)
        if (std::find(b.begin(), b.end(), x) != b.end())
            return true;
    return false;
}

} // namespace

Plan make_plan(const ProblemSpec &spec, std::vector<PlanStep> total_order) {
    Plan plan;
    plan.total_order = std::move(total_order);
    for (const auto &s : plan.total_order) {
        plan.per_agent[s.agent].push_back(s);
        if (s.kind == ActionKind::Move) {
            auto d = spec.distance(s.from, s.to);
            plan.travel_cost += d.value_or(0.0);
        } else if (s.kind == ActionKind::Do) {
            plan.allocation[s.task] = s.agent;
        }
    }

    // ASAP schedule: an action starts after its agent's previous action and after
    // every earlier action of another agent touching one of its locations.
    const auto &order = plan.total_order;
    std::vector<int> slot(order.size(), 0);
    std::map<std::string, int> next_free;
    for (std::size_t i = 0; i < order.size(); ++i) {
        int t = next_free[order[i].agent];
        auto fi = footprint(order[i]);
        for (std::size_t j = 0; j < i; ++j) {
            if (order[j].agent != order[i].agent && intersects(fi, footprint(order[j])))
                t = std::max(t, slot[j] + 1);
        }
        slot[i] = t;
        next_free[order[i].agent] = t + 1;
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto &row = plan.timed[order[i].agent];
        while (static_cast<int>(row.size()) < slot[i])
            row.push_back(PlanStep::wait(order[i].agent));
        row.push_back(order[i]);
    }
    return plan;
}

double heuristic_value(const Grounding &g, const WorldState &s, Heuristic h) {
    if (h == Heuristic::Blind)
        return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    double best_max = 0.0, sum = 0.0;
    for (int t = 0; t < static_cast<int>(g.num_tasks()); ++t) {
        if (s.done[t])
            continue;
        double d = inf;
        for (int a = 0; a < static_cast<int>(g.num_agents()); ++a) {
            if (g.eligible(a, t))
                d = std::min(d, g.shortest(s.agent_loc[a], g.task_location(t)));
        }
        if (d == inf)
            return inf;
        best_max = std::max(best_max, d);
        sum += d;
    }
    if (h == Heuristic::MaxDistance)
        return best_max;
    return g.num_agents() == 0 ? sum : sum / static_cast<double>(g.num_agents());
}

namespace {

std::string state_key(const WorldState &s) {
    std::string key;
    key.reserve(s.agent_loc.size() * 2 + s.empty.size() + s.done.size());
    for (int l : s.agent_loc) {
        key.push_back(static_cast<char>(l & 0xff));
        key.push_back(static_cast<char>((l >> 8) & 0xff));
    }
    key.append(s.empty.begin(), s.empty.end());
    key.append(s.done.begin(), s.done.end());
    return key;
}

WorldState decode_key(const std::string &key, std::size_t agents, std::size_t locations, double travel_cost) {
    WorldState s;
    std::size_t i = 0;
    for (std::size_t a = 0; a < agents; ++a, i += 2)
        s.agent_loc.push_back(static_cast<unsigned char>(key[i]) | (static_cast<unsigned char>(key[i + 1]) << 8));
    s.empty.assign(key.begin() + static_cast<std::ptrdiff_t>(i),
                   key.begin() + static_cast<std::ptrdiff_t>(i + locations));
    s.done.assign(key.begin() + static_cast<std::ptrdiff_t>(i + locations), key.end());
    s.travel_cost = travel_cost;
    return s;
}

// The state itself lives only in the key of the `best` map.
struct Node {
    const std::string *key = nullptr;
    double g = 0.0;
    int parent = -1;
    Action action;
    int depth = 0;
};

struct OpenEntry {
    double f;
    double h;
    int depth;
    Action action;
    std::uint64_t counter;
    int node;
};

struct OpenGreater {
    bool operator()(const OpenEntry &a, const OpenEntry &b) const {
        if (a.f != b.f)
            return a.f > b.f;
        if (a.h != b.h)
            return a.h > b.h;
        if (a.depth != b.depth)
            return a.depth > b.depth;
        if (a.action != b.action)
            return a.action > b.action;
        return a.counter > b.counter;
    }
};

} // namespace

Plan plan_mission(const ProblemSpec &spec, const PlannerConfig &cfg, SearchStats *stats) {
    if (cfg.timeout.count() <= 0)
        throw ContractViolation("planner timeout must be positive");
    Grounding g(spec);
    const auto deadline = std::chrono::steady_clock::now() + cfg.timeout;
    const double inf = std::numeric_limits<double>::infinity();
    const bool astar = cfg.strategy == SearchStrategy::AStar;

    std::vector<Node> nodes;
    std::unordered_map<std::string, int> best; // state key -> node with lowest g
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenGreater> open;
    std::uint64_t counter = 0;
    SearchStats local;

    WorldState s0 = initial_state(g);
    double h0 = heuristic_value(g, s0, cfg.heuristic);
    if (h0 == inf)
        throw NoPlanExists("some pending task cannot be reached by any eligible agent");
    nodes.push_back({&best.emplace(state_key(s0), 0).first->first, 0.0, -1, {}, 0});
    open.push({h0, h0, 0, {}, counter++, 0});
    std::vector<char> closed(1, 0);

    int goal = -1;
    while (!open.empty()) {
        OpenEntry e = open.top();
        open.pop();
        if (closed[e.node])
            continue;
        closed[e.node] = 1;
        const Node cur = nodes[e.node];
        const WorldState state = decode_key(*cur.key, g.num_agents(), g.num_locations(), cur.g);
        ++local.expanded;
        if ((local.expanded & 1023) == 0 && std::chrono::steady_clock::now() > deadline) {
            if (stats)
                *stats = local;
            throw PlannerTimeout("planner exceeded its time budget after " + std::to_string(local.expanded) +
                                 " expansions");
        }
        if (is_goal(g, state)) {
            goal = e.node;
            break;
        }
        std::vector<Action> succ = enabled_actions(g, state);
        if (cfg.eager_do && !succ.empty() && succ.front().kind == ActionKind::Do)
            succ.resize(1);
        for (const Action &a : succ) {
            WorldState ns = apply(g, state, a);
            double ng = ns.travel_cost;
            std::string key = state_key(ns);
            auto it = best.find(key);
            if (it != best.end() && (closed[it->second] || nodes[it->second].g <= ng))
                continue;
            double h = heuristic_value(g, ns, cfg.heuristic);
            if (h == inf)
                continue;
            int id = static_cast<int>(nodes.size());
            if (nodes.size() >= cfg.max_nodes) {
                if (stats)
                    *stats = local;
                throw LimitExceeded("planner node budget of " + std::to_string(cfg.max_nodes) + " exhausted");
            }
            if (it != best.end()) {
                it->second = id;
                nodes.push_back({&it->first, ng, e.node, a, cur.depth + 1});
            } else {
                nodes.push_back({&best.emplace(std::move(key), id).first->first, ng, e.node, a, cur.depth + 1});
            }
            closed.push_back(0);
            ++local.generated;
            open.push({astar ? ng + h : h, h, cur.depth + 1, a, counter++, id});
        }
    }
    if (stats)
        *stats = local;
    if (goal < 0)
        throw NoPlanExists("goal unreachable from the initial state");

    std::vector<PlanStep> steps;
    for (int n = goal; nodes[n].parent >= 0; n = nodes[n].parent)
        steps.push_back(g.name(nodes[n].action));
    std::reverse(steps.begin(), steps.end());
    return make_plan(g.spec(), std::move(steps));
}

std::vector<PlanViolation> validate_plan(const ProblemSpec &spec, const Plan &plan) {
    std::vector<PlanViolation> out;
    Grounding g(spec);
    WorldState s = initial_state(g);
    std::map<std::string, int> do_count;
    for (std::size_t i = 0; i < plan.total_order.size(); ++i) {
        const PlanStep &step = plan.total_order[i];
        const int idx = static_cast<int>(i);
        Action a;
        try {
            a = g.ground(step);
        } catch (const ContractViolation &e) {
            out.push_back({"C1", idx, e.what()});
            return out;
        }
        if (a.kind == ActionKind::Wait)
            continue;
        if (a.kind == ActionKind::Move) {
            if (g.edge(a.from, a.to) <= 0.0)
                out.push_back({"C1", idx, "no path " + step.from + "-" + step.to});
            else if (s.agent_loc[a.agent] != a.from)
                out.push_back({"C2", idx, step.agent + " is not at " + step.from});
            else if (!s.empty[a.to])
                out.push_back({"C3", idx, step.to + " is occupied"});
            else {
                s = apply(g, s, a);
                continue;
            }
            return out;
        }
        ++do_count[step.task];
        if (s.done[a.task]) {
            out.push_back({"C5", idx, step.task + " is already done"});
            return out;
        }
        if (s.agent_loc[a.agent] != a.to) {
            out.push_back({"C2", idx, step.agent + " is not at " + step.to});
            return out;
        }
        if (!g.eligible(a.agent, a.task)) {
            out.push_back({"C4", idx, step.agent + " is below the allocation threshold for " + step.task});
            return out;
        }
        s = apply(g, s, a);
    }
    for (int t = 0; t < static_cast<int>(g.num_tasks()); ++t) {
        if (!s.done[t])
            out.push_back({"C5", -1, "task " + g.task_name(t) + " is never completed"});
    }

    // Timed schedule: per-agent rows must filter back to per_agent, and no two
    // agents may share a non-depot location in the same slot.
    std::set<std::string> depots;
    {
        std::map<std::string, int> starts;
        for (const auto &a : g.spec().agents)
            if (++starts[a.start_location] > 1)
                depots.insert(a.start_location);
    }
    for (const auto &[agent, row] : plan.timed) {
        std::vector<PlanStep> filtered;
        for (const auto &st : row)
            if (st.kind != ActionKind::Wait)
                filtered.push_back(st);
        auto it = plan.per_agent.find(agent);
        if (it == plan.per_agent.end() || it->second != filtered)
            out.push_back({"schedule", -1, "timed row of " + agent + " does not match its action sequence"});
    }
    int makespan = plan_metrics(plan).makespan;
    std::map<std::string, std::string> pos;
    for (const auto &a : g.spec().agents)
        pos[a.id] = a.start_location;
    for (int t = 0; t < makespan; ++t) {
        for (const auto &[agent, row] : plan.timed) {
            if (t < static_cast<int>(row.size()) && row[t].kind == ActionKind::Move)
                pos[agent] = row[t].to;
        }
        std::map<std::string, std::string> occupant;
        for (const auto &[agent, loc] : pos) {
            if (depots.contains(loc))
                continue;
            auto [it, inserted] = occupant.emplace(loc, agent);
            if (!inserted)
                out.push_back({"C3", -1,
                               "slot " + std::to_string(t) + ": " + it->second + " and " + agent + " share " + loc});
        }
    }
    return out;
}

PlanMetrics plan_metrics(const Plan &plan) {
    PlanMetrics m;
    m.travel_cost = plan.travel_cost;
    for (const auto &[agent, steps] : plan.per_agent)
        m.horizon[agent] = static_cast<int>(steps.size());
    for (const auto &[agent, row] : plan.timed)
        m.makespan = std::max(m.makespan, static_cast<int>(row.size()));
    return m;
}

std::string plan_to_json(const Plan &plan) {
    json doc;
    doc["travel_cost"] = plan.travel_cost;
    json steps = json::array();
    for (const auto &s : plan.total_order)
        steps.push_back(s.to_string());
    doc["actions"] = std::move(steps);
    json per = json::object();
    for (const auto &[agent, row] : plan.per_agent) {
        json r = json::array();
        for (const auto &s : row)
            r.push_back(s.to_string());
        per[agent] = std::move(r);
    }
    doc["per_agent"] = std::move(per);
    json timed = json::object();
    for (const auto &[agent, row] : plan.timed) {
        json r = json::array();
        for (const auto &s : row)
            r.push_back(s.to_string());
        timed[agent] = std::move(r);
    }
    doc["timed"] = std::move(timed);
    doc["allocation"] = plan.allocation;
    auto m = plan_metrics(plan);
    doc["horizon"] = m.horizon;
    doc["makespan"] = m.makespan;
    return doc.dump(2) + "\n";
}

Plan plan_from_json(const ProblemSpec &spec, const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw SpecError("", std::string("malformed plan JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("actions") || !doc["actions"].is_array())
        throw SpecError("actions", "plan document needs an \"actions\" array");
    std::vector<PlanStep> steps;
    for (const auto &a : doc["actions"]) {
        if (!a.is_string())
            throw SpecError("actions", "expected action strings");
        steps.push_back(parse_plan_step(a.get<std::string>(), spec));
    }
    return make_plan(spec, std::move(steps));
}

Plan load_plan(const ProblemSpec &spec, const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw SpecError("", "cannot open plan file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return plan_from_json(spec, buf.str());
}

} // namespace hytask
