#include "hytask/error.hpp"
#include "hytask/fixtures.hpp"
#include "hytask/synthesis.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace hytask;

namespace {

ParametricPlanModel m2_model() {
    ProblemSpec s = m2_spec();
    return build_parametric_model(s, plan_mission(s));
}

ParametricPlanModel vineyard_model() {
    ProblemSpec s = vineyard_spec();
    return build_parametric_model(s, vineyard_reference_plan(s));
}

} // namespace

TEST(Synthesis, ConstrainedDominance) {
    Objectives feasible{10, 0.96, true, 0}, better{9, 0.97, true, 0};
    Objectives near{0, 0.94, false, 0.01}, far{0, 0.5, false, 0.45};
    EXPECT_TRUE(dominates(better, feasible));
    EXPECT_FALSE(dominates(feasible, better));
    EXPECT_TRUE(dominates(feasible, near));
    EXPECT_TRUE(dominates(near, far));
    EXPECT_FALSE(dominates(feasible, feasible));
}

TEST(Synthesis, M2Front) {
    ParetoArchive a = exhaustive_synthesize(m2_model());
    std::set<RetryAssignment> got;
    for (const auto &e : a.entries)
        got.insert(e.genotype);
    EXPECT_EQ(got, (std::set<RetryAssignment>{{2, 2}, {2, 3}, {3, 2}, {3, 3}}));
}

TEST(Synthesis, GaIsDeterministicPerSeed) {
    ParametricPlanModel m = vineyard_model();
    GaConfig cfg;
    auto a = synthesize(m, cfg);
    auto b = synthesize(m, cfg);
    EXPECT_EQ(a.archive.entries, b.archive.entries);
    cfg.jobs = 2;
    EXPECT_EQ(synthesize(m, cfg).archive.entries, a.archive.entries);
}

TEST(Synthesis, EvaluationsAreDistinctAndWithinBudget) {
    ParametricPlanModel m = vineyard_model();
    auto r = synthesize(m, {});
    EXPECT_EQ(r.evaluations.size(), 150u);
    std::set<RetryAssignment> seen;
    for (const auto &e : r.evaluations)
        EXPECT_TRUE(seen.insert(e.genotype).second);
}

TEST(Synthesis, ArchiveIsFeasibleAndNondominated) {
    auto r = synthesize(vineyard_model(), {});
    ASSERT_FALSE(r.archive.empty());
    for (const auto &a : r.archive.entries) {
        EXPECT_TRUE(a.objectives.feasible);
        for (const auto &b : r.archive.entries)
            EXPECT_FALSE(dominates(b.objectives, a.objectives));
    }
    EXPECT_EQ(pareto_filter(r.evaluations), r.archive.entries);
}

TEST(Synthesis, InvalidConfigurations) {
    GaConfig cfg;
    cfg.population = 1;
    EXPECT_THROW(synthesize(m2_model(), cfg), ContractViolation);
    cfg.population = 30;
    cfg.evaluations = 10;
    EXPECT_THROW(synthesize(m2_model(), cfg), ContractViolation);
    EXPECT_THROW(exhaustive_synthesize(vineyard_model(), 100), LimitExceeded);
}

TEST(Synthesis, EmptyArchiveCarriesDiagnostic) {
    ParametricPlanModel m = m2_model();
    m.p_succ = 0.9999;
    ParetoArchive a = exhaustive_synthesize(m);
    EXPECT_TRUE(a.empty());
    EXPECT_FALSE(a.diagnostic.empty());
}

TEST(Synthesis, ArchiveJsonRoundTrip) {
    ProblemSpec s = vineyard_spec();
    Plan plan = vineyard_reference_plan(s);
    auto r = synthesize(build_parametric_model(s, plan), {});
    r.archive.plan_hash = plan_hash(plan);
    ParetoArchive back = archive_from_json(archive_to_json(r.archive));
    EXPECT_EQ(back.entries, r.archive.entries);
    EXPECT_EQ(back.plan_hash, r.archive.plan_hash);
    EXPECT_EQ(back.slots, r.archive.slots);
    EXPECT_NE(front_csv(r.archive).find('\n'), std::string::npos);
}
