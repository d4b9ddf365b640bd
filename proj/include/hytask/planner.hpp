#pragma once

// Forward state-space planner over the grounded world semantics, minimising
// total travel distance, plus plan validation and time-indexing.

#include "hytask/world.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hytask {

struct Plan {
    /// Planner trace, in execution order.
    std::vector<PlanStep> total_order;
    /// Agent-filtered subsequences of `total_order`; agents without actions are absent.
    std::map<std::string, std::vector<PlanStep>> per_agent;
    /// Parallel schedule: entry h of an agent's row occupies global slot h. Gaps are Wait steps.
    std::map<std::string, std::vector<PlanStep>> timed;
    double travel_cost = 0.0;
    /// task instance -> agent performing its Do
    std::map<std::string, std::string> allocation;

    friend bool operator==(const Plan &, const Plan &) = default;
};

/// Derives the per-agent view, the timed schedule, travel cost and allocation from a trace.
Plan make_plan(const ProblemSpec &spec, std::vector<PlanStep> total_order);

enum class SearchStrategy { AStar, Gbfs };
enum class Heuristic {
    MaxDistance,     // admissible and consistent
    AverageDistance, // summed per-task distances over the number of agents; inadmissible, for gbfs
    Blind,
};

struct PlannerConfig {
    SearchStrategy strategy = SearchStrategy::AStar;
    Heuristic heuristic = Heuristic::MaxDistance;
    std::chrono::milliseconds timeout{60000};
    /// When some Do is enabled, expand only the first one. Doing a task never
    /// changes positions or travel cost, so optimal cost is preserved.
    bool eager_do = true;
    /// Search nodes kept in memory; LimitExceeded beyond it.
    std::size_t max_nodes = 6'000'000;
};

struct SearchStats {
    std::size_t expanded = 0;
    std::size_t generated = 0;
};

/// Throws NoPlanExists when the goal is unreachable, PlannerTimeout past the deadline
/// and LimitExceeded past the node budget.
Plan plan_mission(const ProblemSpec &spec, const PlannerConfig &cfg = {}, SearchStats *stats = nullptr);

double heuristic_value(const Grounding &g, const WorldState &s, Heuristic h);

struct PlanViolation {
    std::string constraint; // C1..C5, or "schedule"
    int step = -1;          // index into total_order, -1 when not tied to a step
    std::string message;
};

/// Replays the trace from the initial state and checks the timed schedule.
std::vector<PlanViolation> validate_plan(const ProblemSpec &spec, const Plan &plan);

struct PlanMetrics {
    double travel_cost = 0.0;
    std::map<std::string, int> horizon; // actions per agent
    int makespan = 0;                   // slots in the timed schedule
};

PlanMetrics plan_metrics(const Plan &plan);

std::string plan_to_json(const Plan &plan);
Plan plan_from_json(const ProblemSpec &spec, const std::string &text);
Plan load_plan(const ProblemSpec &spec, const std::string &path);

} // namespace hytask
