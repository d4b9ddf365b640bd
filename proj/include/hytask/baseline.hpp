#pragma once

// Monolithic baseline: one MDP covering allocation, scheduling, retries and
// outcomes, built directly from the mission and solved with the MDP routines.

#include "hytask/pmc.hpp"
#include "hytask/spec_model.hpp"
#include "hytask/uncertainty_model.hpp"

#include <cstddef>
#include <vector>

namespace hytask {

/// Joint states: agent locations, emptiness flags, task status and one failure
/// counter per eligible (agent, task) pair, plus "success" and "fail" sinks.
/// Every agent's enabled Move/Do is a choice; a Do that fails Retry(a, t) times
/// (at least once) fails the mission. Labels: success, fail, done.
/// Throws StateBudgetExceeded when exploration passes `state_budget`.
Mdp build_full_mdp(const ProblemSpec &spec, std::size_t state_budget = 2'000'000);

struct BaselineResult {
    double p_max = 0.0;         // Pmax=? [ F "success" ]
    double r_min_bounded = 0.0; // Rmin=? [ C<=k ]
    int k = 20;
};

BaselineResult baseline_queries(const Mdp &mdp, int k = 20);

struct ParetoPoint {
    double expected_cost = 0.0;
    double success_probability = 0.0;
    friend bool operator==(const ParetoPoint &, const ParetoPoint &) = default;
};

/// Nondominated (min cost, max probability) points, sorted by cost.
std::vector<ParetoPoint> pareto_points(std::vector<ParetoPoint> pts, double tol = 1e-12);

/// Solves every memoryless deterministic policy that reaches "done" almost surely.
/// Throws LimitExceeded when the policy count exceeds `limit`.
std::vector<ParetoPoint> enumerate_policies(const Mdp &mdp, std::size_t limit = 1u << 16);

/// Exact front over deterministic policies (memory allowed) that reach "done"
/// almost surely, by a set-valued fixpoint over the states.
std::vector<ParetoPoint> deterministic_pareto_front(const Mdp &mdp, std::size_t max_iterations = 100000);

/// True when some front point has cost <= and probability >= the given point (within tol).
bool weakly_dominated(const ParetoPoint &p, const std::vector<ParetoPoint> &front, double tol = 1e-9);

/// States of the instantiated per-agent chains, summed over agents.
std::size_t hybrid_state_count(const ParametricPlanModel &model, const RetryAssignment &x);

} // namespace hytask
