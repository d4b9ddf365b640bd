#include "hytask/spec_model.hpp"

#include "hytask/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hytask {

using nlohmann::json;

std::string_view to_string(AgentKind kind) {
    return kind == AgentKind::Worker ? "worker" : "robot";
}

namespace {

template <typename T> void sort_by_id(std::vector<T> &items) {
    std::sort(items.begin(), items.end(), [](const T &a, const T &b) { return a.id < b.id; });
}

std::string at(const std::string &base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

std::string member(const std::string &base, std::string_view key) {
    return base.empty() ? std::string(key) : base + "." + std::string(key);
}

void reject_unknown_keys(const json &obj, const std::string &path,
                         std::initializer_list<std::string_view> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw SpecError(member(path, it.key()), "unknown key");
    }
}

const json &require(const json &obj, const std::string &path, std::string_view key) {
    auto it = obj.find(std::string(key));
    if (it == obj.end())
        throw SpecError(member(path, key), "missing required key");
    return *it;
}

const json &require_object(const json &v, const std::string &path) {
    if (!v.is_object())
        throw SpecError(path, "expected an object");
    return v;
}

const json &require_array(const json &v, const std::string &path) {
    if (!v.is_array())
        throw SpecError(path, "expected an array");
    return v;
}

std::string get_string(const json &obj, const std::string &path, std::string_view key) {
    const json &v = require(obj, path, key);
    if (!v.is_string())
        throw SpecError(member(path, key), "expected a string");
    return v.get<std::string>();
}

std::string get_optional_string(const json &obj, const std::string &path, std::string_view key) {
    auto it = obj.find(std::string(key));
    if (it == obj.end())
        return {};
    if (!it->is_string())
        throw SpecError(member(path, key), "expected a string");
    return it->get<std::string>();
}

double get_number(const json &obj, const std::string &path, std::string_view key) {
    const json &v = require(obj, path, key);
    if (!v.is_number())
        throw SpecError(member(path, key), "expected a number");
    return v.get<double>();
}

int get_integer(const json &obj, const std::string &path, std::string_view key) {
    const json &v = require(obj, path, key);
    if (!v.is_number_integer())
        throw SpecError(member(path, key), "expected an integer");
    return v.get<int>();
}

} // namespace

void ProblemSpec::canonicalize() {
    sort_by_id(locations);
    for (auto &p : paths) {
        if (p.end < p.start)
            std::swap(p.start, p.end);
    }
    std::sort(paths.begin(), paths.end(), [](const Path &a, const Path &b) {
        return std::tie(a.start, a.end) < std::tie(b.start, b.end);
    });
    for (auto &g : task_groups)
        sort_by_id(g.members);
    sort_by_id(task_groups);
    for (auto &a : agents) {
        std::sort(a.capabilities.begin(), a.capabilities.end(),
                  [](const Capability &x, const Capability &y) { return x.group < y.group; });
    }
    sort_by_id(agents);
    std::sort(overrides.begin(), overrides.end(), [](const auto &a, const auto &b) {
        return std::tie(a.agent, a.task) < std::tie(b.agent, b.task);
    });
}

const Location *ProblemSpec::find_location(std::string_view id) const {
    for (const auto &l : locations)
        if (l.id == id)
            return &l;
    return nullptr;
}

const Agent *ProblemSpec::find_agent(std::string_view id) const {
    for (const auto &a : agents)
        if (a.id == id)
            return &a;
    return nullptr;
}

const TaskGroup *ProblemSpec::find_group(std::string_view id) const {
    for (const auto &g : task_groups)
        if (g.id == id)
            return &g;
    return nullptr;
}

const TaskInstance *ProblemSpec::find_task(std::string_view id) const {
    for (const auto &g : task_groups)
        for (const auto &t : g.members)
            if (t.id == id)
                return &t;
    return nullptr;
}

std::vector<TaskInstance> ProblemSpec::task_instances() const {
    std::vector<TaskInstance> out;
    for (const auto &g : task_groups)
        out.insert(out.end(), g.members.begin(), g.members.end());
    sort_by_id(out);
    return out;
}

std::vector<std::string> ProblemSpec::pending_tasks() const {
    std::vector<std::string> out;
    for (const auto &t : task_instances())
        if (!completed_tasks.contains(t.id))
            out.push_back(t.id);
    return out;
}

std::optional<Capability> ProblemSpec::capability(std::string_view agent, std::string_view group) const {
    const Agent *a = find_agent(agent);
    if (!a)
        return std::nullopt;
    for (const auto &c : a->capabilities)
        if (c.group == group)
            return c;
    return std::nullopt;
}

double ProblemSpec::p_success(std::string_view agent, std::string_view task) const {
    for (const auto &o : overrides)
        if (o.agent == agent && o.task == task)
            return o.p_success;
    const TaskInstance *t = find_task(task);
    if (!t)
        return 0.0;
    auto cap = capability(agent, t->group);
    return cap ? cap->p_success : 0.0;
}

double ProblemSpec::task_cost(std::string_view agent, std::string_view task) const {
    const TaskInstance *t = find_task(task);
    if (!t)
        return 0.0;
    auto cap = capability(agent, t->group);
    return cap ? cap->cost : 0.0;
}

int ProblemSpec::max_retries(std::string_view agent, std::string_view task) const {
    const TaskInstance *t = find_task(task);
    if (!t)
        return 0;
    auto cap = capability(agent, t->group);
    return cap ? cap->max_retries : 0;
}

std::optional<double> ProblemSpec::distance(std::string_view a, std::string_view b) const {
    for (const auto &p : paths) {
        if ((p.start == a && p.end == b) || (p.start == b && p.end == a))
            return p.distance;
    }
    return std::nullopt;
}

void ProblemSpec::set_override(const std::string &agent, const std::string &task, double p) {
    for (auto &o : overrides) {
        if (o.agent == agent && o.task == task) {
            o.p_success = p;
            return;
        }
    }
    overrides.push_back({agent, task, p});
    canonicalize();
}

ProblemSpec parse_problem_spec_unchecked(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw SpecError("", std::string("malformed JSON: ") + e.what());
    }
    require_object(doc, "<root>");
    reject_unknown_keys(doc, "", {"locations", "paths", "tasks", "agents", "constraints", "completed_tasks",
                                  "probability_overrides"});

    ProblemSpec spec;
    const json &locs = require_array(require(doc, "", "locations"), "locations");
    for (std::size_t i = 0; i < locs.size(); ++i) {
        const std::string p = at("locations", i);
        require_object(locs[i], p);
        reject_unknown_keys(locs[i], p, {"id", "description"});
        spec.locations.push_back({get_string(locs[i], p, "id"), get_optional_string(locs[i], p, "description")});
    }
    // Agents without an explicit start are deployed at the first declared location.
    const std::string depot = spec.locations.empty() ? std::string() : spec.locations.front().id;

    if (doc.contains("paths")) {
        const json &paths = require_array(doc["paths"], "paths");
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const std::string p = at("paths", i);
            require_object(paths[i], p);
            reject_unknown_keys(paths[i], p, {"start", "end", "distance", "description"});
            spec.paths.push_back({get_string(paths[i], p, "start"), get_string(paths[i], p, "end"),
                                  get_number(paths[i], p, "distance"),
                                  get_optional_string(paths[i], p, "description")});
        }
    }

    const json &tasks = require_array(require(doc, "", "tasks"), "tasks");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const std::string p = at("tasks", i);
        require_object(tasks[i], p);
        reject_unknown_keys(tasks[i], p, {"id", "description", "instances"});
        TaskGroup g{get_string(tasks[i], p, "id"), get_optional_string(tasks[i], p, "description"), {}};
        const std::string ip = member(p, "instances");
        const json &inst = require_array(require(tasks[i], p, "instances"), ip);
        for (std::size_t j = 0; j < inst.size(); ++j) {
            const std::string q = at(ip, j);
            require_object(inst[j], q);
            reject_unknown_keys(inst[j], q, {"id", "location"});
            g.members.push_back({get_string(inst[j], q, "id"), g.id, get_string(inst[j], q, "location")});
        }
        spec.task_groups.push_back(std::move(g));
    }

    const json &agents = require_array(require(doc, "", "agents"), "agents");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const std::string p = at("agents", i);
        require_object(agents[i], p);
        reject_unknown_keys(agents[i], p, {"id", "type", "tasks", "location"});
        Agent a;
        a.id = get_string(agents[i], p, "id");
        const std::string type = get_string(agents[i], p, "type");
        if (type == "worker")
            a.kind = AgentKind::Worker;
        else if (type == "robot")
            a.kind = AgentKind::Robot;
        else
            throw SpecError(member(p, "type"), "expected \"worker\" or \"robot\"");
        a.start_location = agents[i].contains("location") ? get_string(agents[i], p, "location") : depot;
        const std::string tp = member(p, "tasks");
        const json &caps = require_array(require(agents[i], p, "tasks"), tp);
        for (std::size_t j = 0; j < caps.size(); ++j) {
            const std::string q = at(tp, j);
            require_object(caps[j], q);
            reject_unknown_keys(caps[j], q, {"id", "cost", "p_success", "retries"});
            a.capabilities.push_back({get_string(caps[j], q, "id"), get_number(caps[j], q, "cost"),
                                      get_number(caps[j], q, "p_success"), get_integer(caps[j], q, "retries")});
        }
        spec.agents.push_back(std::move(a));
    }

    const json &cons = require_object(require(doc, "", "constraints"), "constraints");
    reject_unknown_keys(cons, "constraints", {"mission_probability_of_success", "min_assignment_probability"});
    spec.constraints.p_succ = get_number(cons, "constraints", "mission_probability_of_success");
    spec.constraints.gamma = get_number(cons, "constraints", "min_assignment_probability");

    if (doc.contains("completed_tasks")) {
        const json &done = require_array(doc["completed_tasks"], "completed_tasks");
        for (std::size_t i = 0; i < done.size(); ++i) {
            if (!done[i].is_string())
                throw SpecError(at("completed_tasks", i), "expected a string");
            spec.completed_tasks.insert(done[i].get<std::string>());
        }
    }
    if (doc.contains("probability_overrides")) {
        const json &ov = require_array(doc["probability_overrides"], "probability_overrides");
        for (std::size_t i = 0; i < ov.size(); ++i) {
            const std::string p = at("probability_overrides", i);
            require_object(ov[i], p);
            reject_unknown_keys(ov[i], p, {"agent", "task", "p_success"});
            spec.overrides.push_back(
                {get_string(ov[i], p, "agent"), get_string(ov[i], p, "task"), get_number(ov[i], p, "p_success")});
        }
    }
    return spec;
}

std::vector<Violation> validate(const ProblemSpec &spec) {
    std::vector<Violation> out;
    auto error = [&](std::string path, std::string msg) {
        out.push_back({Violation::Severity::Error, std::move(path), std::move(msg)});
    };
    auto warning = [&](std::string path, std::string msg) {
        out.push_back({Violation::Severity::Warning, std::move(path), std::move(msg)});
    };

    // PDDL object names share one namespace: locations, agents and task instances.
    std::map<std::string, std::string> objects;
    auto claim = [&](const std::string &id, const std::string &path) {
        if (id.empty()) {
            error(path, "empty identifier");
            return;
        }
        auto [it, inserted] = objects.emplace(id, path);
        if (!inserted)
            error(path, "duplicate id '" + id + "' (also at " + it->second + ")");
    };

    for (std::size_t i = 0; i < spec.locations.size(); ++i)
        claim(spec.locations[i].id, at("locations", i) + ".id");

    std::set<std::pair<std::string, std::string>> seen_paths;
    for (std::size_t i = 0; i < spec.paths.size(); ++i) {
        const Path &p = spec.paths[i];
        const std::string base = at("paths", i);
        if (!spec.find_location(p.start))
            error(base + ".start", "unknown location '" + p.start + "'");
        if (!spec.find_location(p.end))
            error(base + ".end", "unknown location '" + p.end + "'");
        if (p.start == p.end)
            error(base, "path start equals end");
        if (!(p.distance > 0.0))
            error(base + ".distance", "distance must be positive");
        auto key = std::minmax(p.start, p.end);
        if (!seen_paths.emplace(key.first, key.second).second)
            error(base, "duplicate path " + key.first + "-" + key.second);
    }

    std::set<std::string> group_ids;
    for (std::size_t i = 0; i < spec.task_groups.size(); ++i) {
        const TaskGroup &g = spec.task_groups[i];
        const std::string base = at("tasks", i);
        if (!group_ids.insert(g.id).second)
            error(base + ".id", "duplicate task group '" + g.id + "'");
        if (g.members.empty())
            error(base + ".instances", "task group has no instances");
        for (std::size_t j = 0; j < g.members.size(); ++j) {
            const std::string ib = at(base + ".instances", j);
            claim(g.members[j].id, ib + ".id");
            if (!spec.find_location(g.members[j].location))
                error(ib + ".location", "unknown location '" + g.members[j].location + "'");
        }
    }

    for (std::size_t i = 0; i < spec.agents.size(); ++i) {
        const Agent &a = spec.agents[i];
        const std::string base = at("agents", i);
        claim(a.id, base + ".id");
        if (!spec.find_location(a.start_location))
            error(base + ".location", "unknown location '" + a.start_location + "'");
        std::set<std::string> groups;
        for (std::size_t j = 0; j < a.capabilities.size(); ++j) {
            const Capability &c = a.capabilities[j];
            const std::string cb = at(base + ".tasks", j);
            if (!spec.find_group(c.group))
                error(cb + ".id", "unknown task group '" + c.group + "'");
            if (!groups.insert(c.group).second)
                error(cb + ".id", "duplicate capability for group '" + c.group + "'");
            if (!(c.p_success >= 0.0 && c.p_success <= 1.0))
                error(cb + ".p_success", "probability out of range [0,1]");
            if (!(c.cost >= 0.0))
                error(cb + ".cost", "cost must be nonnegative");
            if (c.max_retries < 0)
                error(cb + ".retries", "retries must be nonnegative");
        }
    }

    const auto &k = spec.constraints;
    if (!(k.p_succ > 0.0 && k.p_succ <= 1.0))
        error("constraints.mission_probability_of_success", "probability out of range (0,1]");
    if (!(k.gamma > 0.0 && k.gamma <= 1.0))
        error("constraints.min_assignment_probability", "probability out of range (0,1]");

    std::size_t ci = 0;
    for (const auto &t : spec.completed_tasks) {
        if (!spec.find_task(t))
            error(at("completed_tasks", ci), "unknown task '" + t + "'");
        ++ci;
    }
    for (std::size_t i = 0; i < spec.overrides.size(); ++i) {
        const auto &o = spec.overrides[i];
        const std::string base = at("probability_overrides", i);
        if (!spec.find_agent(o.agent))
            error(base + ".agent", "unknown agent '" + o.agent + "'");
        if (!spec.find_task(o.task))
            error(base + ".task", "unknown task '" + o.task + "'");
        if (!(o.p_success >= 0.0 && o.p_success <= 1.0))
            error(base + ".p_success", "probability out of range [0,1]");
    }

    for (std::size_t i = 0; i < spec.task_groups.size(); ++i) {
        for (std::size_t j = 0; j < spec.task_groups[i].members.size(); ++j) {
            const auto &t = spec.task_groups[i].members[j];
            bool performable = std::any_of(spec.agents.begin(), spec.agents.end(), [&](const Agent &a) {
                return spec.p_success(a.id, t.id) >= k.gamma;
            });
            if (!performable)
                warning(at(at("tasks", i) + ".instances", j),
                        "task '" + t.id + "' has no agent with p_success >= gamma");
        }
    }
    return out;
}

ProblemSpec parse_problem_spec(std::string_view json_text) {
    ProblemSpec spec = parse_problem_spec_unchecked(json_text);
    for (const auto &v : validate(spec)) {
        if (v.severity == Violation::Severity::Error)
            throw SpecError(v.field_path, v.message);
    }
    spec.canonicalize();
    return spec;
}

std::string serialize_problem_spec(const ProblemSpec &spec) {
    json doc = json::object();
    json locs = json::array();
    for (const auto &l : spec.locations) {
        json o = {{"id", l.id}};
        if (!l.description.empty())
            o["description"] = l.description;
        locs.push_back(std::move(o));
    }
    doc["locations"] = std::move(locs);
    json paths = json::array();
    for (const auto &p : spec.paths) {
        json o = {{"start", p.start}, {"end", p.end}, {"distance", p.distance}};
        if (!p.description.empty())
            o["description"] = p.description;
        paths.push_back(std::move(o));
    }
    doc["paths"] = std::move(paths);
    json tasks = json::array();
    for (const auto &g : spec.task_groups) {
        json o = {{"id", g.id}};
        if (!g.description.empty())
            o["description"] = g.description;
        json inst = json::array();
        for (const auto &t : g.members)
            inst.push_back({{"id", t.id}, {"location", t.location}});
        o["instances"] = std::move(inst);
        tasks.push_back(std::move(o));
    }
    doc["tasks"] = std::move(tasks);
    json agents = json::array();
    for (const auto &a : spec.agents) {
        json caps = json::array();
        for (const auto &c : a.capabilities)
            caps.push_back({{"id", c.group}, {"cost", c.cost}, {"p_success", c.p_success}, {"retries", c.max_retries}});
        agents.push_back({{"id", a.id},
                          {"type", std::string(to_string(a.kind))},
                          {"location", a.start_location},
                          {"tasks", std::move(caps)}});
    }
    doc["agents"] = std::move(agents);
    doc["constraints"] = {{"mission_probability_of_success", spec.constraints.p_succ},
                          {"min_assignment_probability", spec.constraints.gamma}};
    if (!spec.completed_tasks.empty())
        doc["completed_tasks"] = spec.completed_tasks;
    if (!spec.overrides.empty()) {
        json ov = json::array();
        for (const auto &o : spec.overrides)
            ov.push_back({{"agent", o.agent}, {"task", o.task}, {"p_success", o.p_success}});
        doc["probability_overrides"] = std::move(ov);
    }
    return doc.dump(2) + "\n";
}

ProblemSpec load_problem_spec(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw SpecError("", "cannot open spec file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_problem_spec(buf.str());
}

} // namespace hytask
