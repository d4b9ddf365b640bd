#pragma once

// Mission model: agents, locations, paths, task groups, capabilities
// and mission constraints, parsed from the JSON mission file.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hytask {

enum class AgentKind { Worker, Robot };

std::string_view to_string(AgentKind kind);

struct Location {
    std::string id;
    std::string description;
    friend bool operator==(const Location &, const Location &) = default;
};

/// Undirected path. Stored normalised with `start < end`; queries are symmetric.
struct Path {
    std::string start;
    std::string end;
    double distance = 1.0;
    std::string description;
    friend bool operator==(const Path &, const Path &) = default;
};

struct TaskInstance {
    std::string id;
    std::string group;
    std::string location;
    friend bool operator==(const TaskInstance &, const TaskInstance &) = default;
};

struct TaskGroup {
    std::string id;
    std::string description;
    std::vector<TaskInstance> members;
    friend bool operator==(const TaskGroup &, const TaskGroup &) = default;
};

/// Per (agent, task group) cost, success probability and retry cap, inherited
/// by every instance of the group.
struct Capability {
    std::string group;
    double cost = 0.0;
    double p_success = 0.0;
    int max_retries = 0;
    friend bool operator==(const Capability &, const Capability &) = default;
};

struct Agent {
    std::string id;
    AgentKind kind = AgentKind::Worker;
    std::string start_location;
    std::vector<Capability> capabilities;
    friend bool operator==(const Agent &, const Agent &) = default;
};

struct MissionConstraints {
    double p_succ = 0.95; // mission success floor
    double gamma = 0.5;   // allocation threshold
    friend bool operator==(const MissionConstraints &, const MissionConstraints &) = default;
};

/// Runtime knowledge: a success probability observed for one (agent, task instance)
/// pair that supersedes the group capability.
struct ProbabilityOverride {
    std::string agent;
    std::string task;
    double p_success = 0.0;
    friend bool operator==(const ProbabilityOverride &, const ProbabilityOverride &) = default;
};

struct Violation {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::string field_path;
    std::string message;
};

class ProblemSpec {
public:
    std::vector<Location> locations;
    std::vector<Path> paths;
    std::vector<TaskGroup> task_groups;
    std::vector<Agent> agents;
    MissionConstraints constraints;
    /// Task instances already completed in the initial configuration.
    std::set<std::string> completed_tasks;
    std::vector<ProbabilityOverride> overrides;

    /// Sorts every collection by id and normalises path direction.
    void canonicalize();

    const Location *find_location(std::string_view id) const;
    const Agent *find_agent(std::string_view id) const;
    const TaskGroup *find_group(std::string_view id) const;
    const TaskInstance *find_task(std::string_view id) const;

    /// All task instances, ordered by id.
    std::vector<TaskInstance> task_instances() const;
    std::vector<std::string> pending_tasks() const;

    std::optional<Capability> capability(std::string_view agent, std::string_view group) const;
    /// PSuccess(a, t); zero for groups the agent does not list.
    double p_success(std::string_view agent, std::string_view task) const;
    double task_cost(std::string_view agent, std::string_view task) const;
    int max_retries(std::string_view agent, std::string_view task) const;

    std::optional<double> distance(std::string_view a, std::string_view b) const;
    bool has_path(std::string_view a, std::string_view b) const { return distance(a, b).has_value(); }

    void set_override(const std::string &agent, const std::string &task, double p);

    friend bool operator==(const ProblemSpec &, const ProblemSpec &) = default;
};

/// Parses and validates a mission document. Throws SpecError naming the field
/// of the first error-severity violation.
ProblemSpec parse_problem_spec(std::string_view json_text);

/// Structural parse only: types and unknown keys are checked, cross references are not.
ProblemSpec parse_problem_spec_unchecked(std::string_view json_text);

std::string serialize_problem_spec(const ProblemSpec &spec);

std::vector<Violation> validate(const ProblemSpec &spec);

ProblemSpec load_problem_spec(const std::string &path);

} // namespace hytask
