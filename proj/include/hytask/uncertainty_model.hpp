#pragma once

// A plan augmented with task uncertainty: one chain per agent, a retry slot per
// fallible Do, and instantiation into concrete per-agent DTMCs.

#include "hytask/planner.hpp"
#include "hytask/pmc.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hytask {

/// One synthesisable attempt budget: the number of attempts the agent may spend on a task.
struct RetrySlot {
    std::string agent;
    std::string task;
    int lower = 1;
    int upper = 1;
    /// Attempts already failed when the model starts (nonzero only in suffix models).
    int initial_failures = 0;

    int range_size() const { return upper >= lower ? upper - lower + 1 : 0; }
    friend bool operator==(const RetrySlot &, const RetrySlot &) = default;
};

struct ChainAction {
    PlanStep step;
    double reward = 0.0;    // distance for Move, task cost for Do
    double p_success = 1.0; // Do only
    int slot = -1;          // model slot index; -1 for Move and for single-attempt Do
    friend bool operator==(const ChainAction &, const ChainAction &) = default;
};

struct AgentChain {
    std::string agent;
    std::vector<ChainAction> actions;
    std::vector<int> slots; // model slot indices in chain order

    std::size_t n_act() const { return actions.size(); }
    friend bool operator==(const AgentChain &, const AgentChain &) = default;
};

struct ParametricPlanModel {
    std::vector<AgentChain> chains; // ordered by agent id
    std::vector<RetrySlot> slots;   // chain-major order; genotype positions
    double p_succ = 0.95;
    /// Charge the task cost on the deterministic exhaust transition as well.
    bool charge_exhaust = false;

    /// Number of genotypes (saturating at SIZE_MAX).
    std::size_t space_size() const;
};

/// One attempt budget per model slot, in slot order.
using RetryAssignment = std::vector<int>;

/// Throws ModelError when the plan has a Do the agent has no capability for.
ParametricPlanModel build_parametric_model(const ProblemSpec &spec, const Plan &plan, bool charge_exhaust = false);

/// The remaining mission after `cursor` steps of the plan's total order were
/// executed. `failures` holds observed failed attempts per task; a pending task
/// with f failures starts at x = f with budget range [f+1, Retry].
ParametricPlanModel build_suffix_model(const ProblemSpec &spec, const Plan &plan, std::size_t cursor,
                                       const std::map<std::string, int> &failures, bool charge_exhaust = false);

enum class Encoding {
    Compact, // (c, x of the current task)
    Full,    // (c, every retry counter), as a guarded-command model would store it
};

/// Throws ContractViolation for out-of-range or wrongly sized assignments.
void check_assignment(const ParametricPlanModel &model, const RetryAssignment &x);

/// One DTMC per chain, labelled "success" and "done", with a "cost" reward.
std::vector<Dtmc> instantiate(const ParametricPlanModel &model, const RetryAssignment &x,
                              Encoding encoding = Encoding::Compact);

MissionMetrics evaluate_metrics(const ParametricPlanModel &model, const RetryAssignment &x,
                                const SolverOptions &opts = {});

/// Budgets keyed by task instance.
std::map<std::string, int> to_retry_dict(const ParametricPlanModel &model, const RetryAssignment &x);
/// Inverse of to_retry_dict; every slot task must be present.
RetryAssignment from_retry_dict(const ParametricPlanModel &model, const std::map<std::string, int> &dict);

/// Guarded-command (PRISM language) model text. Without an assignment, the budgets are
/// emitted as `evolve int` parameters with their ranges.
std::string export_model_source(const ParametricPlanModel &model,
                                const std::optional<RetryAssignment> &x = std::nullopt);
std::string export_properties(const ParametricPlanModel &model);

} // namespace hytask
