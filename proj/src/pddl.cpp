#include "hytask/pddl.hpp"

#include "hytask/error.hpp"
#include "hytask/util.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace hytask {

namespace {

bool non_unit_distances(const ProblemSpec &spec) {
    return std::any_of(spec.paths.begin(), spec.paths.end(), [](const Path &p) { return p.distance != 1.0; });
}

} // namespace

std::string export_pddl_domain(const ProblemSpec &spec) {
    const bool weighted = non_unit_distances(spec);
    std::ostringstream o;
    o << "(define (domain hybrid-task-planning)\n"
      << "  (:requirements :strips :typing :negative-preconditions :numeric-fluents)\n"
      << "  (:types location task agent)\n"
      << "  (:predicates\n"
      << "    (agent_at ?a - agent ?l - location)\n"
      << "    (path ?from - location ?to - location)\n"
      << "    (empty ?l - location)\n"
      << "    (task_loc ?t - task ?l - location)\n"
      << "    (task_done ?t - task))\n"
      << "  (:functions\n"
      << "    (p_success ?a - agent ?t - task)\n";
    if (weighted)
        o << "    (distance ?from - location ?to - location)\n";
    o << "    (travel_dist))\n"
      << "  (:action move\n"
      << "    :parameters (?a - agent ?from - location ?to - location)\n"
      << "    :precondition (and (agent_at ?a ?from) (path ?from ?to) (empty ?to))\n"
      << "    :effect (and (not (agent_at ?a ?from)) (agent_at ?a ?to) (empty ?from) (not (empty ?to))\n"
      << "                 (increase (travel_dist) " << (weighted ? "(distance ?from ?to)" : "1") << ")))\n"
      << "  (:action do\n"
      << "    :parameters (?a - agent ?t - task ?l - location)\n"
      << "    :precondition (and (agent_at ?a ?l) (task_loc ?t ?l) (not (task_done ?t))\n"
      << "                       (>= (p_success ?a ?t) " << format_number(spec.constraints.gamma) << "))\n"
      << "    :effect (task_done ?t)))\n";
    return o.str();
}

std::string export_pddl_problem(const ProblemSpec &input, const std::string &problem_name) {
    ProblemSpec spec = input;
    spec.canonicalize();
    const bool weighted = non_unit_distances(spec);
    const auto tasks = spec.task_instances();
    std::ostringstream o;
    o << "(define (problem " << problem_name << ")\n"
      << "  (:domain hybrid-task-planning)\n"
      << "  (:objects\n   ";
    for (const auto &l : spec.locations)
        o << " " << l.id;
    o << " - location\n   ";
    for (const auto &t : tasks)
        o << " " << t.id;
    o << " - task\n   ";
    for (const auto &a : spec.agents)
        o << " " << a.id;
    o << " - agent)\n"
      << "  (:init\n"
      << "    (= (travel_dist) 0)\n";
    std::set<std::string> occupied;
    for (const auto &a : spec.agents) {
        o << "    (agent_at " << a.id << " " << a.start_location << ")\n";
        occupied.insert(a.start_location);
    }
    for (const auto &p : spec.paths) {
        o << "    (path " << p.start << " " << p.end << ") (path " << p.end << " " << p.start << ")\n";
        if (weighted) {
            o << "    (= (distance " << p.start << " " << p.end << ") " << format_number(p.distance) << ")"
              << " (= (distance " << p.end << " " << p.start << ") " << format_number(p.distance) << ")\n";
        }
    }
    for (const auto &l : spec.locations)
        if (!occupied.contains(l.id))
            o << "    (empty " << l.id << ")\n";
    for (const auto &t : tasks)
        o << "    (task_loc " << t.id << " " << t.location << ")\n";
    for (const auto &t : spec.completed_tasks)
        o << "    (task_done " << t << ")\n";
    for (const auto &a : spec.agents)
        for (const auto &t : tasks)
            o << "    (= (p_success " << a.id << " " << t.id << ") " << format_number(spec.p_success(a.id, t.id))
              << ")\n";
    o << "  )\n"
      << "  (:goal (and";
    for (const auto &t : tasks)
        o << "\n    (task_done " << t.id << ")";
    o << "))\n"
      << "  (:metric minimize (travel_dist)))\n";
    return o.str();
}

std::vector<SExpr> parse_sexprs(const std::string &text) {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < text.size();) {
        char c = text[i];
        if (c == ';') {
            while (i < text.size() && text[i] != '\n')
                ++i;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '(' || c == ')') {
            tokens.emplace_back(1, c);
            ++i;
        } else {
            std::size_t j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '(' &&
                   text[j] != ')' && text[j] != ';')
                ++j;
            std::string tok = text.substr(i, j - i);
            tokens.push_back(tok);
            i = j;
        }
    }
    std::size_t pos = 0;
    std::function<SExpr()> read = [&]() -> SExpr {
        if (pos >= tokens.size())
            throw ModelError("unexpected end of PDDL input");
        const std::string &t = tokens[pos++];
        if (t == ")")
            throw ModelError("unbalanced ')' in PDDL input");
        if (t != "(")
            return SExpr{t, {}};
        SExpr list;
        while (pos < tokens.size() && tokens[pos] != ")")
            list.items.push_back(read());
        if (pos >= tokens.size())
            throw ModelError("unbalanced '(' in PDDL input");
        ++pos;
        return list;
    };
    std::vector<SExpr> out;
    while (pos < tokens.size())
        out.push_back(read());
    return out;
}

namespace {

std::string render(const SExpr &e) {
    if (e.is_atom())
        return e.atom;
    std::string s = "(";
    for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i)
            s += " ";
        s += render(e.items[i]);
    }
    return s + ")";
}

SExpr single_define(const std::string &text) {
    std::vector<SExpr> holder = parse_sexprs(text);
    if (holder.size() != 1 || holder[0].is_atom() || holder[0].items.empty() || holder[0].items[0].atom != "define")
        throw ModelError("expected a single (define ...) form");
    return std::move(holder[0]);
}

// Typed list "a b - t c - u" into (name, type) pairs.
std::vector<std::pair<std::string, std::string>> typed_list(const std::vector<SExpr> &items, std::size_t from) {
    std::vector<std::pair<std::string, std::string>> out;
    std::vector<std::string> pending;
    for (std::size_t i = from; i < items.size(); ++i) {
        if (items[i].atom == "-" && i + 1 < items.size()) {
            for (auto &p : pending)
                out.emplace_back(p, items[i + 1].atom);
            pending.clear();
            ++i;
        } else {
            pending.push_back(items[i].atom);
        }
    }
    for (auto &p : pending)
        out.emplace_back(p, "object");
    return out;
}

} // namespace

PddlDomain parse_pddl_domain(const std::string &text) {
    const SExpr def = single_define(text);
    PddlDomain d;
    for (std::size_t i = 1; i < def.items.size(); ++i) {
        const SExpr &sec = def.items[i];
        if (sec.is_atom() || sec.items.empty())
            continue;
        const std::string &head = sec.items[0].atom;
        if (head == "domain" && sec.items.size() > 1) {
            d.name = sec.items[1].atom;
        } else if (head == ":requirements") {
            for (std::size_t j = 1; j < sec.items.size(); ++j)
                d.requirements.insert(sec.items[j].atom);
        } else if (head == ":types") {
            for (std::size_t j = 1; j < sec.items.size(); ++j)
                d.types.push_back(sec.items[j].atom);
        } else if (head == ":predicates") {
            for (std::size_t j = 1; j < sec.items.size(); ++j)
                d.predicates.push_back(sec.items[j].items.at(0).atom);
        } else if (head == ":functions") {
            for (std::size_t j = 1; j < sec.items.size(); ++j)
                d.functions.push_back(sec.items[j].items.at(0).atom);
        } else if (head == ":action") {
            PddlAction a;
            a.name = sec.items.at(1).atom;
            for (std::size_t j = 2; j + 1 < sec.items.size(); j += 2) {
                const std::string &key = sec.items[j].atom;
                const SExpr &val = sec.items[j + 1];
                if (key == ":parameters")
                    a.parameters = typed_list(val.items, 0);
                else if (key == ":precondition")
                    a.precondition = val;
                else if (key == ":effect")
                    a.effect = val;
            }
            d.actions.push_back(std::move(a));
        }
    }
    return d;
}

PddlProblem parse_pddl_problem(const std::string &text) {
    const SExpr def = single_define(text);
    PddlProblem p;
    for (std::size_t i = 1; i < def.items.size(); ++i) {
        const SExpr &sec = def.items[i];
        if (sec.is_atom() || sec.items.empty())
            continue;
        const std::string &head = sec.items[0].atom;
        if (head == "problem" && sec.items.size() > 1) {
            p.name = sec.items[1].atom;
        } else if (head == ":objects") {
            for (auto &[name, type] : typed_list(sec.items, 1))
                p.objects[type].push_back(name);
        } else if (head == ":init") {
            for (std::size_t j = 1; j < sec.items.size(); ++j) {
                const SExpr &f = sec.items[j];
                if (!f.items.empty() && f.items[0].atom == "=")
                    p.fluents[render(f.items.at(1))] = std::stod(f.items.at(2).atom);
                else
                    p.facts.insert(render(f));
            }
        } else if (head == ":goal") {
            const SExpr &g = sec.items.at(1);
            if (!g.items.empty() && g.items[0].atom == "and") {
                for (std::size_t j = 1; j < g.items.size(); ++j)
                    p.goal.push_back(render(g.items[j]));
            } else {
                p.goal.push_back(render(g));
            }
        } else if (head == ":metric") {
            std::string m;
            for (std::size_t j = 1; j < sec.items.size(); ++j)
                m += (j > 1 ? " " : "") + render(sec.items[j]);
            p.metric = m;
        }
    }
    return p;
}

namespace {

SExpr substitute(const SExpr &e, const std::map<std::string, std::string> &binding) {
    if (e.is_atom()) {
        auto it = binding.find(e.atom);
        return it == binding.end() ? e : SExpr{it->second, {}};
    }
    SExpr out;
    for (const auto &c : e.items)
        out.items.push_back(substitute(c, binding));
    return out;
}

double numeric_value(const SExpr &e, const PddlProblem &p) {
    if (e.is_atom())
        return std::stod(e.atom);
    auto it = p.fluents.find(render(e));
    if (it == p.fluents.end())
        throw ModelError("undefined fluent " + render(e));
    return it->second;
}

bool holds(const SExpr &e, const PddlProblem &p) {
    if (e.is_atom())
        throw ModelError("unexpected atom in condition: " + e.atom);
    if (e.items.empty())
        return true;
    const std::string &head = e.items[0].atom;
    if (head == "and") {
        for (std::size_t i = 1; i < e.items.size(); ++i)
            if (!holds(e.items[i], p))
                return false;
        return true;
    }
    if (head == "not")
        return !holds(e.items.at(1), p);
    if (head == ">=" || head == ">" || head == "<=" || head == "<" || head == "=") {
        double a = numeric_value(e.items.at(1), p), b = numeric_value(e.items.at(2), p);
        if (head == ">=")
            return a >= b;
        if (head == ">")
            return a > b;
        if (head == "<=")
            return a <= b;
        if (head == "<")
            return a < b;
        return a == b;
    }
    return p.facts.contains(render(e));
}

} // namespace

std::vector<std::string> pddl_applicable_actions(const PddlDomain &domain, const PddlProblem &problem) {
    std::vector<std::string> out;
    for (const auto &act : domain.actions) {
        std::map<std::string, std::string> binding;
        std::vector<std::string> args;
        std::function<void(std::size_t)> rec = [&](std::size_t k) {
            if (k == act.parameters.size()) {
                if (holds(substitute(act.precondition, binding), problem)) {
                    std::string s = "(" + act.name;
                    for (const auto &a : args)
                        s += " " + a;
                    out.push_back(s + ")");
                }
                return;
            }
            auto it = problem.objects.find(act.parameters[k].second);
            if (it == problem.objects.end())
                return;
            for (const auto &obj : it->second) {
                binding[act.parameters[k].first] = obj;
                args.push_back(obj);
                rec(k + 1);
                args.pop_back();
            }
        };
        rec(0);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string pddl_action_name(const Grounding &g, const Action &a) {
    if (a.kind == ActionKind::Move)
        return "(move " + g.agent_name(a.agent) + " " + g.location_name(a.from) + " " + g.location_name(a.to) + ")";
    if (a.kind == ActionKind::Do)
        return "(do " + g.agent_name(a.agent) + " " + g.task_name(a.task) + " " + g.location_name(a.to) + ")";
    return "(wait " + g.agent_name(a.agent) + ")";
}

} // namespace hytask
