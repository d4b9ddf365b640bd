#pragma once

// PDDL 2.1 export of the planning task, and a small reader for the subset we
// emit so exports can be grounded and compared with the native semantics.

#include "hytask/spec_model.hpp"
#include "hytask/world.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace hytask {

std::string export_pddl_domain(const ProblemSpec &spec);
std::string export_pddl_problem(const ProblemSpec &spec, const std::string &problem_name = "mission");

struct SExpr {
    std::string atom; // empty for lists
    std::vector<SExpr> items;
    bool is_atom() const { return !atom.empty(); }
};

/// Parses one or more s-expressions; comments start with ';'.
std::vector<SExpr> parse_sexprs(const std::string &text);

struct PddlAction {
    std::string name;
    std::vector<std::pair<std::string, std::string>> parameters; // (?var, type)
    SExpr precondition;
    SExpr effect;
};

struct PddlDomain {
    std::string name;
    std::set<std::string> requirements;
    std::vector<std::string> types;
    std::vector<std::string> predicates;
    std::vector<std::string> functions;
    std::vector<PddlAction> actions;
};

struct PddlProblem {
    std::string name;
    std::map<std::string, std::vector<std::string>> objects; // type -> names
    std::set<std::string> facts;                           // "(agent_at w1 l1)"
    std::map<std::string, double> fluents;                 // "(p_success w1 t1l4)" -> 1
    std::vector<std::string> goal;
    std::string metric;
};

PddlDomain parse_pddl_domain(const std::string &text);
PddlProblem parse_pddl_problem(const std::string &text);

/// Ground actions applicable in the problem's initial state, as "(move w2 l1 l4)".
std::vector<std::string> pddl_applicable_actions(const PddlDomain &domain, const PddlProblem &problem);

/// The same rendering for the native semantics, for comparison.
std::string pddl_action_name(const Grounding &g, const Action &a);

} // namespace hytask
