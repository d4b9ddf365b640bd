#include "hytask/baseline.hpp"
#include "hytask/error.hpp"
#include "hytask/fixtures.hpp"
#include "hytask/synthesis.hpp"

#include <gtest/gtest.h>

using namespace hytask;

TEST(Baseline, M2MdpShape) {
    Mdp m = build_full_mdp(m2_spec());
    EXPECT_GT(m.num_states(), 10u);
    EXPECT_TRUE(m.has_label("success"));
    EXPECT_TRUE(m.has_label("fail"));
    EXPECT_TRUE(m.has_label("done"));
    BaselineResult q = baseline_queries(m);
    // three attempts each: (1 - .1^3)(1 - .2^3)
    EXPECT_NEAR(q.p_max, 0.999 * 0.992, 1e-9);
}

TEST(Baseline, StateBudget) {
    EXPECT_THROW(build_full_mdp(vineyard_spec(), 1000), StateBudgetExceeded);
}

namespace {

ProblemSpec single_attempt_m2() {
    ProblemSpec s = m2_spec();
    for (auto &a : s.agents)
        for (auto &c : a.capabilities)
            c.max_retries = 1;
    return s;
}

} // namespace

TEST(Baseline, FixpointFrontMatchesPolicyEnumeration) {
    // one worker, one task with three attempts
    ProblemSpec spec = m2_spec();
    std::erase_if(spec.agents, [](const Agent &a) { return a.id == "r1"; });
    std::erase_if(spec.task_groups, [](const TaskGroup &g) { return g.id == "g2"; });
    Mdp m = build_full_mdp(spec);
    auto enumerated = pareto_points(enumerate_policies(m, 1u << 22));
    auto front = deterministic_pareto_front(m);
    ASSERT_FALSE(enumerated.empty());
    EXPECT_EQ(front.size(), enumerated.size());
    // memoryless policies are a subset of deterministic ones
    for (const auto &p : enumerated)
        EXPECT_TRUE(weakly_dominated(p, front));
    ASSERT_FALSE(front.empty());
    EXPECT_NEAR(front.back().success_probability, baseline_queries(m).p_max, 1e-9);
}

TEST(Baseline, ParetoPointFilter) {
    auto pts = pareto_points({{5, 0.9}, {4, 0.9}, {6, 0.95}, {7, 0.94}});
    EXPECT_EQ(pts, (std::vector<ParetoPoint>{{4, 0.9}, {6, 0.95}}));
    EXPECT_TRUE(weakly_dominated({5, 0.9}, pts));
    EXPECT_FALSE(weakly_dominated({3, 0.9}, pts));
}

TEST(Baseline, FullBudgetHybridPointIsDominated) {
    // The monolithic model always retries up to the cap, so only the full-budget
    // genotype has a counterpart there; cheaper budgets give up earlier.
    ProblemSpec spec = m2_spec();
    auto front = deterministic_pareto_front(build_full_mdp(spec));
    ParametricPlanModel model = build_parametric_model(spec, plan_mission(spec));
    Objectives o = evaluate(model, {3, 3});
    EXPECT_TRUE(weakly_dominated({o.expected_cost, o.success_probability}, front));
    Objectives single = evaluate(build_parametric_model(single_attempt_m2(), plan_mission(single_attempt_m2())), {1, 1});
    EXPECT_TRUE(weakly_dominated({single.expected_cost, single.success_probability},
                                 deterministic_pareto_front(build_full_mdp(single_attempt_m2()))));
}

TEST(Baseline, HybridStateCount) {
    ProblemSpec spec = m2_spec();
    ParametricPlanModel model = build_parametric_model(spec, plan_mission(spec));
    std::size_t total = 0;
    for (const auto &d : instantiate(model, {3, 3}))
        total += d.num_states();
    EXPECT_EQ(hybrid_state_count(model, {3, 3}), total);
}
