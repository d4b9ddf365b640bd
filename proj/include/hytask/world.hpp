#pragma once

// Grounded planning semantics over a ProblemSpec: states, the Move/Do action
// schemas and their application.

#include "hytask/spec_model.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace hytask {

enum class ActionKind : std::uint8_t { Do, Move, Wait };

/// A grounded action over the index space of a Grounding.
/// For Do, `from == to` is the task location. Wait only appears in timed schedules.
struct Action {
    ActionKind kind = ActionKind::Wait;
    int agent = -1;
    int from = -1;
    int to = -1;
    int task = -1;

    friend bool operator==(const Action &, const Action &) = default;
    friend auto operator<=>(const Action &a, const Action &b) {
        return std::tie(a.kind, a.agent, a.task, a.to, a.from) <=> std::tie(b.kind, b.agent, b.task, b.to, b.from);
    }
};

/// Name-based action, stable across re-groundings of edited missions.
struct PlanStep {
    ActionKind kind = ActionKind::Wait;
    std::string agent;
    std::string from;  // Move origin; Do location
    std::string to;    // Move destination; Do location
    std::string task;  // Do only

    static PlanStep move(std::string agent, std::string from, std::string to);
    static PlanStep act(std::string agent, std::string task, std::string location);
    static PlanStep wait(std::string agent);

    /// Move(w2,l1,l4), Do(w2,t1l4) or Wait(w2).
    std::string to_string() const;

    friend bool operator==(const PlanStep &, const PlanStep &) = default;
};

/// Parses the `to_string` form. Do(agent,task) resolves its location through the mission.
PlanStep parse_plan_step(const std::string &text, const ProblemSpec &spec);

struct WorldState {
    std::vector<int> agent_loc;
    std::vector<char> empty; // per location
    std::vector<char> done;  // per task
    double travel_cost = 0.0;

    friend bool operator==(const WorldState &, const WorldState &) = default;
};

class Grounding {
public:
    explicit Grounding(const ProblemSpec &spec);

    const ProblemSpec &spec() const { return spec_; }

    std::size_t num_agents() const { return agents_.size(); }
    std::size_t num_locations() const { return locations_.size(); }
    std::size_t num_tasks() const { return tasks_.size(); }

    const std::string &agent_name(int a) const { return agents_[a]; }
    const std::string &location_name(int l) const { return locations_[l]; }
    const std::string &task_name(int t) const { return tasks_[t]; }

    int agent_index(std::string_view id) const;
    int location_index(std::string_view id) const;
    int task_index(std::string_view id) const;

    int task_location(int t) const { return task_loc_[t]; }
    /// Direct path distance, negative when no path exists.
    double edge(int a, int b) const { return edge_[a * locations_.size() + b]; }
    const std::vector<int> &neighbours(int l) const { return adj_[l]; }
    /// Shortest-path distance; infinity when disconnected.
    double shortest(int a, int b) const { return dist_[a * locations_.size() + b]; }

    double p_success(int agent, int task) const { return p_[agent * tasks_.size() + task]; }
    double task_cost(int agent, int task) const { return cost_[agent * tasks_.size() + task]; }
    int max_retries(int agent, int task) const { return retries_[agent * tasks_.size() + task]; }
    /// C4: the agent's competency meets the allocation threshold.
    bool eligible(int agent, int task) const { return p_success(agent, task) >= gamma_; }
    double gamma() const { return gamma_; }

    Action ground(const PlanStep &step) const;
    PlanStep name(const Action &action) const;

private:
    ProblemSpec spec_;
    std::vector<std::string> agents_, locations_, tasks_;
    std::vector<int> task_loc_;
    std::vector<double> edge_, dist_;
    std::vector<std::vector<int>> adj_;
    std::vector<double> p_, cost_;
    std::vector<int> retries_;
    double gamma_ = 0.5;
};

/// Agents at their start locations; every location not hosting an agent is empty;
/// tasks listed as completed are already done.
WorldState initial_state(const Grounding &g);

/// Enabled actions in canonical Action order (Dos before Moves).
std::vector<Action> enabled_actions(const Grounding &g, const WorldState &s);

bool is_enabled(const Grounding &g, const WorldState &s, const Action &a);

/// Throws ContractViolation when the action is not enabled in `s`.
WorldState apply(const Grounding &g, const WorldState &s, const Action &a);

bool is_goal(const Grounding &g, const WorldState &s);

} // namespace hytask
