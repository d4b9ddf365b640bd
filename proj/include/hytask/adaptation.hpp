#pragma once

// Runtime adaptation: monitored changes C1..C4, reduction of the verified plan
// set, escalation to re-synthesis (A2) or replanning (A3), and a seeded
// execution harness that injects scripted changes.

#include "hytask/synthesis.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hytask {

enum class ChangeType { C1, C2, C3, C4 };

struct Change {
    ChangeType type = ChangeType::C1;
    int time = 0;
    std::string agent; // C4
    std::string task;  // C1, C4
    double value = 0.0; // new p_succ (C2), gamma (C3) or task probability (C4)
};

std::string to_string(ChangeType t);
std::string describe(const Change &c);

enum class AdaptationLevel { NA, A1, A2, A3 };
std::string to_string(AdaptationLevel l);

struct AdaptationOutcome {
    AdaptationLevel level = AdaptationLevel::NA;
    std::optional<std::map<std::string, int>> new_assignment;
    std::optional<Plan> new_plan;
    std::vector<std::string> stages_rerun; // subset of S0..S4
    std::size_t reduced_set_size = 0;
    std::string detail;
};

enum class C2Mode {
    Conditional, // remaining-mission probability given progress
    PlanLevel,   // archived whole-plan probability
};

struct AdaptationConfig {
    GaConfig ga;
    PlannerConfig planner;
    SolverOptions solver;
    C2Mode c2_mode = C2Mode::Conditional;
    bool charge_exhaust = false;
};

/// Knowledge and progress of a running mission. Time advances one unit per
/// executed step attempt of the plan's total order.
struct ExecutionContext {
    ProblemSpec spec;  // knowledge base; start locations stay those of the mission
    Plan plan;         // deployed plan, executed prefix included
    std::map<std::string, int> deployed; // attempt budgets of the deployed plan, per task
    ParetoArchive archive;
    ParametricPlanModel model; // model the archive was synthesised on
    std::size_t cursor = 0;    // executed steps of plan.total_order
    int clock = 0;
    std::map<std::string, int> failures;              // observed failed attempts per task
    std::map<std::string, std::string> failure_agent; // agent that made those attempts
    std::set<std::string> done;
    std::map<std::string, std::string> location; // current agent locations
    double cost = 0.0;
    AdaptationConfig config;

    bool finished() const { return cursor >= plan.total_order.size(); }
};

/// Context at mission start. Throws ContractViolation when `deployed` does not cover the model slots.
ExecutionContext make_context(const ProblemSpec &spec, const Plan &plan, const ParetoArchive &archive,
                              const ParametricPlanModel &model, const std::map<std::string, int> &deployed,
                              const AdaptationConfig &cfg = {});

/// Budgets compatible with the observed failures: a pending task needs a budget
/// above its failure count, a completed one at least one attempt beyond it.
bool prefix_consistent(const ExecutionContext &ctx, const ArchiveEntry &entry);

/// Success probability of the remaining mission under `entry`, conditioned on progress.
double remaining_success_probability(const ExecutionContext &ctx, const ArchiveEntry &entry);

std::vector<ArchiveEntry> reduce_ps_tf(const ExecutionContext &ctx, const std::string &task);
std::vector<ArchiveEntry> reduce_ps_psucc(const ExecutionContext &ctx, double new_p_succ);
std::vector<ArchiveEntry> reduce_ps_passign(const ExecutionContext &ctx, double new_gamma);

enum class PtaskDecision { Unchanged, Empty, Rebuild };
PtaskDecision reduce_ps_ptask(const ExecutionContext &ctx, const std::string &agent, const std::string &task,
                              double new_p);

/// Minimal expected cost, then maximal probability, then smallest genotype.
/// Throws ContractViolation on an empty set.
const ArchiveEntry &select_new_plan(const std::vector<ArchiveEntry> &reduced);

/// Pending (agent, task) pairs of the plan suffix from the cursor.
std::vector<std::pair<std::string, std::string>> remaining_allocations(const ExecutionContext &ctx);

/// Applies the change to the knowledge base and adapts the deployed plan.
/// Throws NoPlanExists or MissionUnrecoverable when A3 cannot produce a verified plan.
AdaptationOutcome adapt(ExecutionContext &ctx, const Change &change);

struct Scenario {
    std::vector<Change> changes;
    enum class Outcomes { Sample, Success } unscripted = Outcomes::Sample;
    /// Deploy the policy's choice among archive entries carrying these budgets.
    std::map<std::string, int> deploy;
    std::optional<GaConfig> synthesis;
};

/// Throws SpecError on malformed documents and ContractViolation when two changes share a time unit.
Scenario parse_scenario(const std::string &text);
Scenario load_scenario(const std::string &path);

struct TraceEvent {
    enum class Kind { Step, Adaptation, Summary } kind = Kind::Step;
    int time = 0;
    std::string action;   // Step
    std::string outcome;  // Step: moved/success/failure; Summary: completed/unrecoverable
    std::optional<Change> change;
    std::optional<AdaptationOutcome> adaptation;
    double cost = 0.0; // cumulative
    std::string message;
};

struct Trace {
    std::vector<TraceEvent> events;
    std::vector<AdaptationOutcome> adaptations;
    std::map<std::string, int> stage_reruns; // S0..S4 -> count
    bool completed = false;
    double cost = 0.0;
    int time = 0;
    Plan final_plan;
    std::vector<PlanStep> executed; // completed steps, in execution order

    std::string to_jsonl() const;
};

/// Called after every adaptation with the updated context and the steps executed so far.
using AdaptationObserver = std::function<void(const ExecutionContext &, const Change &, const AdaptationOutcome &,
                                              const std::vector<PlanStep> &)>;

/// Deploys from the archive (respecting the scenario's pins) and builds the context.
ExecutionContext deploy(const ProblemSpec &spec, const Plan &plan, const ParetoArchive &archive,
                        const ParametricPlanModel &model, const Scenario &scenario, const AdaptationConfig &cfg = {});

/// Steps the plan one attempt per time unit. Unscripted Do outcomes are sampled
/// from a generator seeded with `seed`; every failure is monitored as C1.
Trace simulate(ExecutionContext ctx, const Scenario &scenario, std::uint64_t seed, int max_time = 100000,
               const AdaptationObserver &observer = {});

} // namespace hytask
