#include "hytask/error.hpp"
#include "hytask/fixtures.hpp"
#include "hytask/world.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace hytask;

namespace {

bool has(const Grounding &g, const std::vector<Action> &acts, const PlanStep &step) {
    Action a = g.ground(step);
    return std::find(acts.begin(), acts.end(), a) != acts.end();
}

} // namespace

TEST(World, InitialState) {
    Grounding g(m2_spec());
    WorldState s = initial_state(g);
    EXPECT_EQ(g.location_name(s.agent_loc[g.agent_index("w1")]), "l1");
    EXPECT_FALSE(s.empty[g.location_index("l1")]);
    EXPECT_TRUE(s.empty[g.location_index("l2")]);
    EXPECT_EQ(std::count(s.done.begin(), s.done.end(), 1), 0);
    EXPECT_FALSE(is_goal(g, s));
}

TEST(World, MoveFollowsPathsAndUpdatesCost) {
    Grounding g(m2_spec());
    WorldState s = initial_state(g);
    auto acts = enabled_actions(g, s);
    EXPECT_TRUE(has(g, acts, PlanStep::move("w1", "l1", "l2")));
    EXPECT_TRUE(has(g, acts, PlanStep::move("r1", "l1", "l3")));
    WorldState t = apply(g, s, g.ground(PlanStep::move("w1", "l1", "l2")));
    EXPECT_DOUBLE_EQ(t.travel_cost, 1.0);
    EXPECT_FALSE(t.empty[g.location_index("l2")]);
    // emptiness is one flag per location: leaving clears it even with another agent there
    EXPECT_TRUE(t.empty[g.location_index("l1")]);
    EXPECT_FALSE(has(g, enabled_actions(g, t), PlanStep::move("r1", "l1", "l2")));
}

TEST(World, DoNeedsCapabilityAndLocation) {
    Grounding g(m2_spec());
    WorldState s = initial_state(g);
    s = apply(g, s, g.ground(PlanStep::move("w1", "l1", "l2")));
    auto acts = enabled_actions(g, s);
    EXPECT_TRUE(has(g, acts, PlanStep::act("w1", "ta", "l2")));
    EXPECT_EQ(acts.front().kind, ActionKind::Do);
    s = apply(g, s, g.ground(PlanStep::act("w1", "ta", "l2")));
    EXPECT_TRUE(s.done[g.task_index("ta")]);
    EXPECT_FALSE(has(g, enabled_actions(g, s), PlanStep::act("w1", "ta", "l2")));
}

TEST(World, IneligibleAgentCannotDo) {
    ProblemSpec spec = m2_spec();
    spec.set_override("w1", "ta", 0.3); // below gamma
    Grounding g(spec);
    EXPECT_FALSE(g.eligible(g.agent_index("w1"), g.task_index("ta")));
    WorldState s = apply(g, initial_state(g), g.ground(PlanStep::move("w1", "l1", "l2")));
    EXPECT_FALSE(has(g, enabled_actions(g, s), PlanStep::act("w1", "ta", "l2")));
}

TEST(World, ApplyRejectsDisabledActions) {
    Grounding g(m2_spec());
    WorldState s = initial_state(g);
    EXPECT_THROW(apply(g, s, g.ground(PlanStep::act("w1", "ta", "l2"))), ContractViolation);
}

TEST(World, GoalAfterAllTasks) {
    Grounding g(m2_spec());
    WorldState s = initial_state(g);
    for (const auto &step : {PlanStep::move("w1", "l1", "l2"), PlanStep::act("w1", "ta", "l2"),
                             PlanStep::move("r1", "l1", "l3"), PlanStep::act("r1", "tb", "l3")})
        s = apply(g, s, g.ground(step));
    EXPECT_TRUE(is_goal(g, s));
    EXPECT_DOUBLE_EQ(s.travel_cost, 2.0);
}

TEST(World, StepNamesRoundTrip) {
    ProblemSpec spec = vineyard_spec();
    Grounding g(spec);
    for (const auto &step : {PlanStep::move("w2", "l1", "l4"), PlanStep::act("w2", "t1l4", "l4")}) {
        EXPECT_EQ(g.name(g.ground(step)), step);
        EXPECT_EQ(parse_plan_step(step.to_string(), spec), step);
    }
    EXPECT_EQ(PlanStep::act("w2", "t1l4", "l4").to_string(), "Do(w2,t1l4)");
}

TEST(World, ShortestDistances) {
    Grounding g(vineyard_spec());
    EXPECT_DOUBLE_EQ(g.shortest(g.location_index("l1"), g.location_index("l9")), 4.0);
    EXPECT_LT(g.edge(g.location_index("l1"), g.location_index("l9")), 0.0);
}
