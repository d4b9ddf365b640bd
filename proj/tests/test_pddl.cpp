#include "hytask/fixtures.hpp"
#include "hytask/pddl.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace hytask;

TEST(Pddl, SexprParsing) {
    auto xs = parse_sexprs("; comment\n(a (b c) d) (e)");
    ASSERT_EQ(xs.size(), 2u);
    EXPECT_EQ(xs[0].items.size(), 3u);
    EXPECT_EQ(xs[0].items[1].items[1].atom, "c");
    EXPECT_EQ(xs[1].items[0].atom, "e");
}

TEST(Pddl, DomainDeclaresBothSchemas) {
    PddlDomain d = parse_pddl_domain(export_pddl_domain(vineyard_spec()));
    std::vector<std::string> names;
    for (const auto &a : d.actions)
        names.push_back(a.name);
    std::sort(names.begin(), names.end());
    EXPECT_EQ(names, (std::vector<std::string>{"do", "move"}));
    EXPECT_TRUE(d.requirements.contains(":fluents") || d.requirements.contains(":numeric-fluents"));
}

TEST(Pddl, ProblemCarriesObjectsAndMetric) {
    ProblemSpec spec = vineyard_spec();
    PddlProblem p = parse_pddl_problem(export_pddl_problem(spec));
    std::size_t objects = 0;
    for (const auto &[type, names] : p.objects)
        objects += names.size();
    EXPECT_EQ(objects, spec.agents.size() + spec.locations.size() + spec.task_instances().size());
    EXPECT_EQ(p.goal.size(), 10u);
    EXPECT_NE(p.metric.find("minimize"), std::string::npos);
}

TEST(Pddl, ApplicableActionsMatchNativeSemantics) {
    for (const ProblemSpec &spec : {vineyard_spec(), m1_spec(), m2_spec()}) {
        PddlDomain d = parse_pddl_domain(export_pddl_domain(spec));
        PddlProblem p = parse_pddl_problem(export_pddl_problem(spec));
        auto exported = pddl_applicable_actions(d, p);
        Grounding g(spec);
        std::vector<std::string> native;
        for (const auto &a : enabled_actions(g, initial_state(g)))
            native.push_back(pddl_action_name(g, a));
        std::sort(exported.begin(), exported.end());
        std::sort(native.begin(), native.end());
        EXPECT_EQ(exported, native);
        EXPECT_FALSE(native.empty());
    }
}
