#include "hytask/adaptation.hpp"
#include "hytask/error.hpp"
#include "hytask/fixtures.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hytask;

namespace {

struct Vineyard {
    ProblemSpec spec = vineyard_spec();
    Plan plan = vineyard_reference_plan(spec);
    ParametricPlanModel model = build_parametric_model(spec, plan);
    ParetoArchive archive = synthesize(model, {}).archive;
};

const Vineyard &vineyard() {
    static const Vineyard v;
    return v;
}

Scenario scripted(std::vector<Change> changes, std::map<std::string, int> pins = {}) {
    Scenario sc;
    sc.changes = std::move(changes);
    sc.unscripted = Scenario::Outcomes::Success;
    sc.deploy = std::move(pins);
    return sc;
}

} // namespace

TEST(Adaptation, ScenarioParsing) {
    Scenario sc = load_scenario(data_path("adaptation_scenario.json"));
    ASSERT_EQ(sc.changes.size(), 5u);
    EXPECT_EQ(sc.changes[3].type, ChangeType::C4);
    EXPECT_EQ(sc.changes[3].agent, "w2");
    EXPECT_DOUBLE_EQ(sc.changes[3].value, 0.89);
    EXPECT_EQ(sc.deploy.at("t1l4"), 2);
    ASSERT_TRUE(sc.synthesis.has_value());
    EXPECT_EQ(sc.unscripted, Scenario::Outcomes::Success);
}

TEST(Adaptation, ScenarioErrors) {
    EXPECT_THROW(parse_scenario("{\"changes\":[{\"time\":1,\"type\":\"C9\"}]}"), SpecError);
    EXPECT_THROW(parse_scenario("{\"changes\":[{\"time\":1,\"type\":\"C2\"}]}"), SpecError);
    EXPECT_THROW(parse_scenario("{\"changes\":[{\"time\":-1,\"type\":\"C2\",\"p_succ\":0.9}]}"), SpecError);
    EXPECT_THROW(parse_scenario("{\"changes\":[{\"time\":1,\"type\":\"C2\",\"p_succ\":0.9},"
                                "{\"time\":1,\"type\":\"C3\",\"gamma\":0.6}]}"),
                 ContractViolation);
    EXPECT_THROW(parse_scenario("not json"), SpecError);
}

TEST(Adaptation, PrefixConsistency) {
    const Vineyard &v = vineyard();
    ExecutionContext ctx = make_context(v.spec, v.plan, v.archive, v.model, v.archive.entries.front().retry_dict);
    ctx.failures["t1l4"] = 1;
    for (const auto &e : v.archive.entries)
        EXPECT_EQ(prefix_consistent(ctx, e), e.retry_dict.at("t1l4") > 1);
}

TEST(Adaptation, SelectPrefersCheapest) {
    const Vineyard &v = vineyard();
    const ArchiveEntry &e = select_new_plan(v.archive.entries);
    for (const auto &o : v.archive.entries)
        EXPECT_LE(e.objectives.expected_cost, o.objectives.expected_cost);
    EXPECT_THROW(select_new_plan({}), ContractViolation);
}

TEST(Adaptation, RelaxedFloorNeedsNoAdaptation) {
    const Vineyard &v = vineyard();
    Scenario sc = scripted({{ChangeType::C2, 3, "", "", 0.8}});
    ExecutionContext ctx = deploy(v.spec, v.plan, v.archive, v.model, sc);
    Trace tr = simulate(ctx, sc, 1);
    ASSERT_EQ(tr.adaptations.size(), 1u);
    EXPECT_EQ(tr.adaptations[0].level, AdaptationLevel::NA);
    EXPECT_TRUE(tr.completed);
    EXPECT_EQ(tr.final_plan, v.plan);
}

TEST(Adaptation, FailureWithinBudgetKeepsPlan) {
    const Vineyard &v = vineyard();
    Scenario sc = scripted({{ChangeType::C1, 1, "", "t1l4", 0}}, {{"t1l4", 2}});
    ExecutionContext ctx = deploy(v.spec, v.plan, v.archive, v.model, sc);
    Trace tr = simulate(ctx, sc, 1);
    ASSERT_EQ(tr.adaptations.size(), 1u);
    EXPECT_EQ(tr.adaptations[0].level, AdaptationLevel::NA);
    EXPECT_TRUE(tr.completed);
    EXPECT_EQ(tr.time, 19); // one extra attempt
}

TEST(Adaptation, MismatchedFailureIsRejected) {
    const Vineyard &v = vineyard();
    Scenario sc = scripted({{ChangeType::C1, 1, "", "t2l5", 0}});
    ExecutionContext ctx = deploy(v.spec, v.plan, v.archive, v.model, sc);
    EXPECT_THROW(simulate(ctx, sc, 1), ContractViolation);
}

TEST(Adaptation, ScenarioStageCounts) {
    const Vineyard &v = vineyard();
    Scenario sc = load_scenario(data_path("adaptation_scenario.json"));
    ExecutionContext ctx = deploy(v.spec, v.plan, v.archive, v.model, sc);
    Trace tr = simulate(ctx, sc, 1);
    std::map<std::string, int> want{{"S0", 1}, {"S1", 1}, {"S2", 1}, {"S3", 2}, {"S4", 2}};
    EXPECT_EQ(tr.stage_reruns, want);
    EXPECT_TRUE(tr.completed);
    // t3l9 moved away from w2 after the threshold rose
    EXPECT_NE(tr.final_plan.allocation.at("t3l9"), "w2");
}

TEST(Adaptation, ExhaustedMissionIsUnrecoverable) {
    ProblemSpec spec = m2_spec();
    Plan plan = plan_mission(spec);
    ParametricPlanModel model = build_parametric_model(spec, plan);
    ParetoArchive archive = exhaustive_synthesize(model);
    int ta_time = -1;
    for (std::size_t i = 0; i < plan.total_order.size(); ++i)
        if (plan.total_order[i].task == "ta")
            ta_time = static_cast<int>(i);
    ASSERT_GE(ta_time, 0);
    std::vector<Change> changes;
    for (int k = 0; k < 3; ++k)
        changes.push_back({ChangeType::C1, ta_time + k, "", "ta", 0});
    Scenario sc = scripted(changes, {{"ta", 3}});
    ExecutionContext ctx = deploy(spec, plan, archive, model, sc);
    Trace tr = simulate(ctx, sc, 1);
    EXPECT_FALSE(tr.completed);
    ASSERT_FALSE(tr.events.empty());
    EXPECT_EQ(tr.events.back().kind, TraceEvent::Kind::Summary);
    EXPECT_EQ(tr.events.back().outcome, "unrecoverable");
}

TEST(Adaptation, SampledRunsAreReproducible) {
    const Vineyard &v = vineyard();
    Scenario sc;
    sc.unscripted = Scenario::Outcomes::Sample;
    ExecutionContext ctx = deploy(v.spec, v.plan, v.archive, v.model, sc);
    Trace a = simulate(ctx, sc, 17), b = simulate(ctx, sc, 17);
    EXPECT_EQ(a.to_jsonl(), b.to_jsonl());
    std::istringstream lines(a.to_jsonl());
    std::string line;
    int n = 0;
    while (std::getline(lines, line))
        n += line.empty() ? 0 : 1;
    EXPECT_EQ(static_cast<std::size_t>(n), a.events.size());
}
