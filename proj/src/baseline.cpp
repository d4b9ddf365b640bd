#include "hytask/baseline.hpp"

#include "hytask/error.hpp"
#include "hytask/world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace hytask {

namespace {

struct Joint {
    WorldState world;
    std::vector<std::uint8_t> counters;

    std::string key() const {
        std::string k;
        for (int l : world.agent_loc)
            k.push_back(static_cast<char>(l));
        for (char e : world.empty)
            k.push_back(e);
        for (char d : world.done)
            k.push_back(d);
        for (auto c : counters)
            k.push_back(static_cast<char>(c));
        return k;
    }
};

} // namespace

Mdp build_full_mdp(const ProblemSpec &spec, std::size_t state_budget) {
    Grounding g(spec);
    if (g.num_locations() > 250 || g.num_agents() > 250)
        throw ContractViolation("instance too large for the joint encoding");
    const int na = static_cast<int>(g.num_agents()), nt = static_cast<int>(g.num_tasks());
    std::vector<int> pair_index(static_cast<std::size_t>(na * nt), -1);
    int pairs = 0;
    for (int a = 0; a < na; ++a)
        for (int t = 0; t < nt; ++t)
            if (g.eligible(a, t))
                pair_index[static_cast<std::size_t>(a * nt + t)] = pairs++;

    MdpBuilder b;
    b.declare_label("success");
    b.declare_label("fail");
    b.declare_label("done");
    std::unordered_map<std::string, std::size_t> index;
    std::deque<std::pair<std::size_t, Joint>> queue;
    std::size_t success = SIZE_MAX, fail = SIZE_MAX;

    auto sink = [&](bool ok) {
        std::size_t &s = ok ? success : fail;
        if (s == SIZE_MAX) {
            if (b.num_states() >= state_budget)
                throw StateBudgetExceeded(b.num_states() + 1, state_budget);
            s = b.add_state();
            b.add_label(ok ? "success" : "fail", s);
            b.add_label("done", s);
            b.add_choice(s, "end");
            b.add_transition(s, s, 1.0, 0.0);
        }
        return s;
    };
    auto intern = [&](Joint j) {
        if (is_goal(g, j.world))
            return sink(true);
        std::string k = j.key();
        auto it = index.find(k);
        if (it != index.end())
            return it->second;
        if (b.num_states() >= state_budget)
            throw StateBudgetExceeded(b.num_states() + 1, state_budget);
        std::size_t s = b.add_state();
        index.emplace(std::move(k), s);
        queue.emplace_back(s, std::move(j));
        return s;
    };

    Joint init{initial_state(g), std::vector<std::uint8_t>(static_cast<std::size_t>(pairs), 0)};
    b.set_initial(intern(init));

    while (!queue.empty()) {
        auto [s, j] = std::move(queue.front());
        queue.pop_front();
        auto actions = enabled_actions(g, j.world);
        if (actions.empty()) {
            b.add_choice(s, "idle");
            b.add_transition(s, s, 1.0, 0.0);
            continue;
        }
        for (const Action &a : actions) {
            std::string name = g.name(a).to_string();
            if (a.kind == ActionKind::Move) {
                Joint n{apply(g, j.world, a), j.counters};
                std::size_t to = intern(std::move(n));
                b.add_choice(s, std::move(name));
                b.add_transition(s, to, 1.0, g.edge(a.from, a.to));
                continue;
            }
            const double p = g.p_success(a.agent, a.task), cost = g.task_cost(a.agent, a.task);
            const int pi = pair_index[static_cast<std::size_t>(a.agent * nt + a.task)];
            const int cap = std::max(g.max_retries(a.agent, a.task), 1);
            std::size_t on_success = intern({apply(g, j.world, a), j.counters});
            std::size_t on_failure;
            if (j.counters[static_cast<std::size_t>(pi)] + 1 >= cap) {
                on_failure = sink(false);
            } else {
                Joint n = j;
                ++n.counters[static_cast<std::size_t>(pi)];
                on_failure = intern(std::move(n));
            }
            b.add_choice(s, std::move(name));
            if (p > 0.0)
                b.add_transition(s, on_success, p, cost);
            if (p < 1.0)
                b.add_transition(s, on_failure, 1.0 - p, cost);
        }
    }
    return b.build();
}

BaselineResult baseline_queries(const Mdp &mdp, int k) {
    BaselineResult r;
    r.k = k;
    r.p_max = mdp_max_reach_probability(mdp, "success");
    r.r_min_bounded = mdp_min_bounded_reward(mdp, k);
    return r;
}

std::vector<ParetoPoint> pareto_points(std::vector<ParetoPoint> pts, double tol) {
    std::sort(pts.begin(), pts.end(), [](const ParetoPoint &a, const ParetoPoint &b) {
        if (a.expected_cost != b.expected_cost)
            return a.expected_cost < b.expected_cost;
        return a.success_probability > b.success_probability;
    });
    std::vector<ParetoPoint> out;
    for (const auto &p : pts) {
        // Sorted by cost: p survives only if it beats every cheaper point on probability.
        if (!out.empty() && p.success_probability <= out.back().success_probability + tol)
            continue;
        if (!out.empty() && p.expected_cost <= out.back().expected_cost + tol)
            out.pop_back();
        out.push_back(p);
    }
    return out;
}

std::vector<ParetoPoint> enumerate_policies(const Mdp &mdp, std::size_t limit) {
    const std::size_t n = mdp.num_states();
    std::size_t count = 1;
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t c = mdp.choice_end(s) - mdp.choice_begin(s);
        if (count > limit / c)
            throw LimitExceeded("more than " + std::to_string(limit) + " memoryless policies");
        count *= c;
    }
    std::vector<ParetoPoint> pts;
    std::vector<std::size_t> policy(n, 0);
    for (std::size_t i = 0; i < count; ++i) {
        Dtmc d = mdp.induced(policy);
        try {
            double cost = expected_reward(d, "cost", "done");
            pts.push_back({cost, reach_probability(d, "success")});
        } catch (const InfiniteReward &) {
        }
        for (std::size_t s = 0; s < n; ++s) {
            if (++policy[s] < mdp.choice_end(s) - mdp.choice_begin(s))
                break;
            policy[s] = 0;
        }
    }
    return pareto_points(std::move(pts));
}

std::vector<ParetoPoint> deterministic_pareto_front(const Mdp &mdp, std::size_t max_iterations) {
    const std::size_t n = mdp.num_states();
    std::vector<std::vector<ParetoPoint>> v(n);
    std::vector<char> sink(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        if (mdp.labelled("done", s)) {
            sink[s] = 1;
            v[s] = {{0.0, mdp.labelled("success", s) ? 1.0 : 0.0}};
        }
    }
    bool changed = true;
    std::size_t it = 0;
    while (changed) {
        if (++it > max_iterations)
            throw LimitExceeded("Pareto fixpoint did not settle");
        changed = false;
        for (std::size_t s = n; s-- > 0;) {
            if (sink[s])
                continue;
            std::vector<ParetoPoint> cand;
            for (std::size_t c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                std::vector<ParetoPoint> acc{{0.0, 0.0}};
                bool ok = true;
                for (std::size_t k = mdp.trans_begin(c); k < mdp.trans_end(c) && ok; ++k) {
                    const auto &succ = v[mdp.target(k)];
                    if (succ.empty() || mdp.target(k) == s) {
                        ok = false;
                        break;
                    }
                    const double p = mdp.probability(k), r = mdp.reward(k);
                    std::vector<ParetoPoint> next;
                    for (const auto &a : acc)
                        for (const auto &q : succ)
                            next.push_back({a.expected_cost + p * (r + q.expected_cost),
                                            a.success_probability + p * q.success_probability});
                    acc = pareto_points(std::move(next));
                }
                if (ok)
                    cand.insert(cand.end(), acc.begin(), acc.end());
            }
            auto nv = pareto_points(std::move(cand));
            bool same = nv.size() == v[s].size();
            for (std::size_t i = 0; same && i < nv.size(); ++i)
                same = std::abs(nv[i].expected_cost - v[s][i].expected_cost) <= 1e-12 &&
                       std::abs(nv[i].success_probability - v[s][i].success_probability) <= 1e-12;
            if (!same) {
                v[s] = std::move(nv);
                changed = true;
            }
        }
    }
    return v[mdp.initial()];
}

bool weakly_dominated(const ParetoPoint &p, const std::vector<ParetoPoint> &front, double tol) {
    for (const auto &q : front)
        if (q.expected_cost <= p.expected_cost + tol && q.success_probability >= p.success_probability - tol)
            return true;
    return false;
}

std::size_t hybrid_state_count(const ParametricPlanModel &model, const RetryAssignment &x) {
    std::size_t n = 0;
    for (const auto &d : instantiate(model, x))
        n += d.num_states();
    return n;
}

} // namespace hytask
