#pragma once

// Multi-objective search over attempt budgets: NSGA-II with constrained
// dominance, an exhaustive oracle, and the persisted Pareto archive.

#include "hytask/uncertainty_model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hytask {

struct Objectives {
    double expected_cost = 0.0;       // minimise
    double success_probability = 0.0; // maximise
    bool feasible = false;            // success_probability >= p_succ
    double violation = 0.0;           // max(0, p_succ - success_probability)

    friend bool operator==(const Objectives &, const Objectives &) = default;
};

Objectives evaluate(const ParametricPlanModel &model, const RetryAssignment &x, const SolverOptions &opts = {});

/// Constrained dominance: feasible beats infeasible, infeasible points compare by
/// violation, feasible points by Pareto dominance on (cost, probability).
bool dominates(const Objectives &a, const Objectives &b);

struct ArchiveEntry {
    RetryAssignment genotype;
    Objectives objectives;
    std::map<std::string, int> retry_dict;

    friend bool operator==(const ArchiveEntry &, const ArchiveEntry &) = default;
};

struct GaConfig {
    int population = 30;
    int evaluations = 150;
    double crossover_rate = 0.9;
    double mutation_rate = -1.0; // negative: 1 / number of slots
    std::uint64_t seed = 42;
    int jobs = 1;
};

struct ParetoArchive {
    std::string plan_hash;
    std::uint64_t seed = 0;
    GaConfig config;
    std::vector<RetrySlot> slots;
    /// Every feasible, nondominated genotype seen, ordered by (cost, -probability, genotype).
    std::vector<ArchiveEntry> entries;
    /// Set when no feasible assignment was found.
    std::string diagnostic;

    bool empty() const { return entries.empty(); }
    /// Distinct objective points of the entries, ordered by cost.
    std::vector<std::pair<double, double>> front() const;
    const ArchiveEntry *find(const RetryAssignment &genotype) const;
};

struct SynthesisResult {
    ParetoArchive archive;
    std::vector<ArchiveEntry> evaluations; // in evaluation order
};

/// NSGA-II over integer genotypes. Every evaluated genotype is distinct; when the
/// evaluation budget covers the whole space, the search enumerates it.
SynthesisResult synthesize(const ParametricPlanModel &model, const GaConfig &cfg = {},
                           const SolverOptions &opts = {});

/// Brute force over the full genotype space. Throws LimitExceeded when the space exceeds `limit`.
ParetoArchive exhaustive_synthesize(const ParametricPlanModel &model, std::size_t limit = 1u << 20,
                                    const SolverOptions &opts = {});

/// Feasible, nondominated subset of the given evaluations.
std::vector<ArchiveEntry> pareto_filter(const std::vector<ArchiveEntry> &evaluated);

std::string plan_hash(const Plan &plan);

std::string archive_to_json(const ParetoArchive &archive);
ParetoArchive archive_from_json(const std::string &text);
std::string front_csv(const ParetoArchive &archive);

} // namespace hytask
