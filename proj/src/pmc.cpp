#include "hytask/pmc.hpp"

#include "hytask/error.hpp"
#include "hytask/util.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

namespace hytask {

namespace {

constexpr double kStochasticTolerance = 1e-12;

const std::vector<char> &lookup_label(const std::map<std::string, std::vector<char>> &labels,
                                      const std::string &name) {
    auto it = labels.find(name);
    if (it == labels.end())
        throw ModelError("unknown label \"" + name + "\"");
    return it->second;
}

} // namespace

// ============================================================================
// Dtmc
// ============================================================================

double Dtmc::reward(const std::string &name, std::size_t k) const {
    auto it = rewards_.find(name);
    if (it == rewards_.end())
        throw ModelError("unknown reward structure \"" + name + "\"");
    return it->second[k];
}

bool Dtmc::labelled(const std::string &name, std::size_t s) const {
    auto it = labels_.find(name);
    return it != labels_.end() && it->second[s];
}

const std::vector<char> &Dtmc::label(const std::string &name) const { return lookup_label(labels_, name); }

std::vector<std::string> Dtmc::label_names() const {
    std::vector<std::string> out;
    for (const auto &[k, v] : labels_)
        out.push_back(k);
    return out;
}

std::vector<std::string> Dtmc::reward_names() const {
    std::vector<std::string> out;
    for (const auto &[k, v] : rewards_)
        out.push_back(k);
    return out;
}

const std::string &Dtmc::valuation(std::size_t s) const {
    static const std::string none;
    return s < valuations_.size() ? valuations_[s] : none;
}

std::string Dtmc::transition_list(const std::string &reward_name) const {
    std::ostringstream o;
    for (std::size_t s = 0; s < num_states(); ++s) {
        for (std::size_t k = row_begin(s); k < row_end(s); ++k) {
            o << s << '\t' << col_[k] << '\t' << format_number(prob_[k]) << '\t'
              << format_number(reward_name.empty() ? 0.0 : reward(reward_name, k)) << '\n';
        }
    }
    return o.str();
}

DtmcBuilder::DtmcBuilder(std::vector<std::string> reward_names) : reward_names_(std::move(reward_names)) {}

std::size_t DtmcBuilder::add_state(std::string valuation) {
    out_.emplace_back();
    valuations_.push_back(std::move(valuation));
    for (auto &[name, v] : labels_)
        v.push_back(0);
    return out_.size() - 1;
}

void DtmcBuilder::add_transition(std::size_t from, std::size_t to, double p, std::vector<double> rewards) {
    if (from >= out_.size() || to >= out_.size())
        throw ModelError("transition references an unknown state");
    if (rewards.size() > reward_names_.size())
        throw ModelError("too many reward values for transition");
    rewards.resize(reward_names_.size(), 0.0);
    out_[from].push_back({to, p, std::move(rewards)});
}

void DtmcBuilder::declare_label(const std::string &name) {
    labels_.try_emplace(name, std::vector<char>(out_.size(), 0));
}

void DtmcBuilder::add_label(const std::string &name, std::size_t s) {
    declare_label(name);
    labels_[name].at(s) = 1;
}

Dtmc DtmcBuilder::build() const {
    Dtmc m;
    const std::size_t n = out_.size();
    if (n == 0)
        throw ModelError("DTMC has no states");
    if (initial_ >= n)
        throw ModelError("initial state out of range");
    m.initial_ = initial_;
    m.row_ptr_.reserve(n + 1);
    m.row_ptr_.push_back(0);
    for (const auto &name : reward_names_)
        m.rewards_[name];
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<Edge> row = out_[s];
        if (row.empty())
            throw ModelError("state " + std::to_string(s) + " has no outgoing transition");
        std::stable_sort(row.begin(), row.end(), [](const Edge &a, const Edge &b) { return a.to < b.to; });
        double total = 0.0;
        for (std::size_t i = 0; i < row.size();) {
            std::size_t j = i;
            double p = 0.0;
            std::vector<double> weighted(reward_names_.size(), 0.0);
            for (; j < row.size() && row[j].to == row[i].to; ++j) {
                if (!(row[j].p >= 0.0) || row[j].p > 1.0 + kStochasticTolerance)
                    throw ModelError("transition probability out of range in state " + std::to_string(s));
                p += row[j].p;
                for (std::size_t r = 0; r < reward_names_.size(); ++r)
                    weighted[r] += row[j].p * row[j].r[r];
            }
            total += p;
            if (p > 0.0) {
                m.col_.push_back(static_cast<std::uint32_t>(row[i].to));
                m.prob_.push_back(p);
                for (std::size_t r = 0; r < reward_names_.size(); ++r) {
                    // Parallel edges keep their expected reward.
                    double value = j - i == 1 ? row[i].r[r] : weighted[r] / p;
                    m.rewards_[reward_names_[r]].push_back(value);
                }
            }
            i = j;
        }
        if (std::abs(total - 1.0) > kStochasticTolerance * std::max<std::size_t>(1, row.size()))
            throw ModelError("outgoing probabilities of state " + std::to_string(s) + " sum to " +
                             format_number(total));
        m.row_ptr_.push_back(m.col_.size());
    }
    m.labels_ = labels_;
    for (auto &[name, v] : m.labels_)
        v.resize(n, 0);
    if (std::any_of(valuations_.begin(), valuations_.end(), [](const std::string &v) { return !v.empty(); }))
        m.valuations_ = valuations_;
    return m;
}

// ============================================================================
// Graph precomputation
// ============================================================================

namespace {

std::vector<std::vector<std::uint32_t>> predecessors(const Dtmc &m) {
    std::vector<std::vector<std::uint32_t>> pred(m.num_states());
    for (std::size_t s = 0; s < m.num_states(); ++s)
        for (std::size_t k = m.row_begin(s); k < m.row_end(s); ++k)
            pred[m.target(k)].push_back(static_cast<std::uint32_t>(s));
    return pred;
}

// Backward closure of `seed`, not expanding through `blocked` states.
std::vector<char> backward_closure(const std::vector<std::vector<std::uint32_t>> &pred, const std::vector<char> &seed,
                                   const std::vector<char> *blocked) {
    std::vector<char> seen = seed;
    std::deque<std::uint32_t> queue;
    for (std::size_t s = 0; s < seed.size(); ++s)
        if (seed[s])
            queue.push_back(static_cast<std::uint32_t>(s));
    while (!queue.empty()) {
        auto s = queue.front();
        queue.pop_front();
        for (auto p : pred[s]) {
            if (seen[p] || (blocked && (*blocked)[p]))
                continue;
            seen[p] = 1;
            queue.push_back(p);
        }
    }
    return seen;
}

} // namespace

std::vector<char> prob0_states(const Dtmc &m, const std::vector<char> &target) {
    auto can_reach = backward_closure(predecessors(m), target, nullptr);
    for (auto &c : can_reach)
        c = !c;
    return can_reach;
}

std::vector<char> prob1_states(const Dtmc &m, const std::vector<char> &target) {
    auto pred = predecessors(m);
    auto zero = backward_closure(pred, target, nullptr);
    for (auto &c : zero)
        c = !c;
    // States that can hit a probability-0 state before the target.
    auto escape = backward_closure(pred, zero, &target);
    for (auto &c : escape)
        c = !c;
    return escape;
}

// ============================================================================
// Linear solves
// ============================================================================

namespace {

// Solves x = A x + b over the unknown states; contributions of known states are
// already folded into b.
std::vector<double> solve_unknowns(const Dtmc &m, const std::vector<char> &unknown, const std::vector<double> &b,
                                   const SolverOptions &opts, std::vector<double> full) {
    const std::size_t n = m.num_states();
    // Only states reachable from the initial state take part in the solve.
    std::vector<char> reach(n, 0);
    std::vector<std::size_t> stack{m.initial()};
    reach[m.initial()] = 1;
    while (!stack.empty()) {
        std::size_t s = stack.back();
        stack.pop_back();
        for (std::size_t k = m.row_begin(s); k < m.row_end(s); ++k) {
            std::size_t t = m.target(k);
            if (!reach[t]) {
                reach[t] = 1;
                stack.push_back(t);
            }
        }
    }
    std::vector<std::uint32_t> index(n, UINT32_MAX);
    std::vector<std::uint32_t> order;
    for (std::size_t s = 0; s < n; ++s) {
        if (unknown[s] && reach[s]) {
            index[s] = static_cast<std::uint32_t>(order.size());
            order.push_back(static_cast<std::uint32_t>(s));
        }
    }
    const std::size_t u = order.size();
    if (u == 0)
        return full;

    bool direct = opts.method == SolverOptions::Method::Direct ||
                  (opts.method == SolverOptions::Method::Auto && u <= opts.direct_limit);
    if (direct) {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(m.num_transitions() + u);
        Eigen::VectorXd rhs(u);
        for (std::size_t i = 0; i < u; ++i) {
            std::size_t s = order[i];
            double diag = 1.0;
            for (std::size_t k = m.row_begin(s); k < m.row_end(s); ++k) {
                std::size_t t = m.target(k);
                if (index[t] == UINT32_MAX)
                    continue;
                if (t == s)
                    diag -= m.probability(k);
                else
                    trip.emplace_back(static_cast<int>(i), static_cast<int>(index[t]), -m.probability(k));
            }
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
            rhs[static_cast<Eigen::Index>(i)] = b[s];
        }
        Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u));
        a.setFromTriplets(trip.begin(), trip.end());
        a.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success)
            throw ModelError("sparse LU factorisation failed");
        Eigen::VectorXd x = lu.solve(rhs);
        if (lu.info() != Eigen::Success)
            throw ModelError("sparse LU solve failed");
        for (std::size_t i = 0; i < u; ++i)
            full[order[i]] = x[static_cast<Eigen::Index>(i)];
        return full;
    }

    // Gauss-Seidel from below: values increase monotonically to the solution.
    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        double delta = 0.0;
        for (std::size_t s : order) {
            double acc = b[s], self = 0.0;
            for (std::size_t k = m.row_begin(s); k < m.row_end(s); ++k) {
                std::size_t t = m.target(k);
                if (index[t] == UINT32_MAX)
                    continue;
                if (t == s)
                    self += m.probability(k);
                else
                    acc += m.probability(k) * full[t];
            }
            double v = self < 1.0 ? acc / (1.0 - self) : full[s];
            delta = std::max(delta, std::abs(v - full[s]));
            full[s] = v;
        }
        if (opts.sweep_observer)
            opts.sweep_observer(full);
        if (delta < opts.tolerance)
            return full;
    }
    throw ModelError("Gauss-Seidel did not converge within the sweep limit");
}

} // namespace

std::vector<double> reach_probabilities(const Dtmc &m, const std::string &target, const SolverOptions &opts) {
    const auto &tgt = m.label(target);
    if (std::none_of(tgt.begin(), tgt.end(), [](char c) { return c != 0; }))
        throw ModelError("target label \"" + target + "\" holds in no state");
    const std::size_t n = m.num_states();
    auto zero = prob0_states(m, tgt);
    auto one = prob1_states(m, tgt);
    std::vector<double> x(n, 0.0), b(n, 0.0);
    std::vector<char> unknown(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        if (one[s])
            x[s] = 1.0;
        else if (!zero[s])
            unknown[s] = 1;
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (!unknown[s])
            continue;
        for (std::size_t k = m.row_begin(s); k < m.row_end(s); ++k)
            if (one[m.target(k)])
                b[s] += m.probability(k);
    }
    return solve_unknowns(m, unknown, b, opts, std::move(x));
}

double reach_probability(const Dtmc &m, const std::string &target, const SolverOptions &opts) {
    return reach_probabilities(m, target, opts)[m.initial()];
}

double expected_reward(const Dtmc &m, const std::string &reward, const std::string &target,
                       const SolverOptions &opts) {
    const auto &tgt = m.label(target);
    const std::size_t n = m.num_states();
    auto one = prob1_states(m, tgt);
    if (!one[m.initial()])
        throw InfiniteReward("target \"" + target + "\" is not reached almost surely; expected reward is infinite");
    std::vector<double> x(n, 0.0), b(n, 0.0);
    std::vector<char> unknown(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        if (!one[s] || tgt[s])
            continue;
        unknown[s] = 1;
        for (std::size_t k = m.row_begin(s); k < m.row_end(s); ++k)
            b[s] += m.probability(k) * m.reward(reward, k);
    }
    return solve_unknowns(m, unknown, b, opts, std::move(x))[m.initial()];
}

MissionMetrics factored_mission_metrics(const std::vector<Dtmc> &chains, const SolverOptions &opts) {
    MissionMetrics out;
    for (const auto &c : chains) {
        out.success_probability *= reach_probability(c, "success", opts);
        out.expected_cost += expected_reward(c, "cost", "done", opts);
    }
    return out;
}

// ============================================================================
// Product and simulation
// ============================================================================

Dtmc compose_product(const std::vector<Dtmc> &chains, std::size_t state_budget) {
    if (chains.empty())
        throw ModelError("product of zero chains");
    if (chains.size() == 1)
        return chains.front();
    const std::size_t k = chains.size();
    std::set<std::string> reward_set;
    for (const auto &c : chains)
        for (const auto &r : c.reward_names())
            reward_set.insert(r);
    std::vector<std::string> reward_names(reward_set.begin(), reward_set.end());

    DtmcBuilder b(reward_names);
    b.declare_label("success");
    b.declare_label("done");
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::vector<std::uint32_t>> tuples;
    auto key_of = [](const std::vector<std::uint32_t> &t) {
        return std::string(reinterpret_cast<const char *>(t.data()), t.size() * sizeof(std::uint32_t));
    };
    auto intern = [&](const std::vector<std::uint32_t> &t) -> std::size_t {
        auto [it, inserted] = index.emplace(key_of(t), tuples.size());
        if (inserted) {
            if (tuples.size() >= state_budget)
                throw StateBudgetExceeded(tuples.size() + 1, state_budget);
            tuples.push_back(t);
            b.add_state();
        }
        return it->second;
    };
    std::vector<std::uint32_t> init(k);
    for (std::size_t i = 0; i < k; ++i)
        init[i] = static_cast<std::uint32_t>(chains[i].initial());
    b.set_initial(intern(init));

    for (std::size_t s = 0; s < tuples.size(); ++s) {
        const std::vector<std::uint32_t> cur = tuples[s];
        std::size_t mover = k;
        bool all_success = true;
        for (std::size_t i = 0; i < k; ++i) {
            if (!chains[i].labelled("success", cur[i]))
                all_success = false;
            if (mover == k && !chains[i].labelled("done", cur[i]))
                mover = i;
        }
        if (all_success)
            b.add_label("success", s);
        if (mover == k) {
            b.add_label("done", s);
            b.add_transition(s, s, 1.0);
            continue;
        }
        const Dtmc &c = chains[mover];
        for (std::size_t e = c.row_begin(cur[mover]); e < c.row_end(cur[mover]); ++e) {
            auto next = cur;
            next[mover] = static_cast<std::uint32_t>(c.target(e));
            std::size_t t = intern(next);
            std::vector<double> r(reward_names.size(), 0.0);
            for (std::size_t j = 0; j < reward_names.size(); ++j) {
                auto names = c.reward_names();
                if (std::find(names.begin(), names.end(), reward_names[j]) != names.end())
                    r[j] = c.reward(reward_names[j], e);
            }
            b.add_transition(s, t, c.probability(e), std::move(r));
        }
    }
    return b.build();
}

SampleResult sample_reach(const Dtmc &m, const std::string &target, const std::string &stop,
                          const std::string &reward, std::size_t runs, std::uint64_t seed, std::size_t max_steps) {
    const auto &tgt = m.label(target);
    const auto &stp = m.label(stop);
    std::mt19937_64 rng(seed);
    SampleResult res;
    res.runs = runs;
    double total = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
        std::size_t s = m.initial();
        double acc = 0.0;
        bool hit = tgt[s];
        for (std::size_t step = 0; step < max_steps && !stp[s] && !m.is_absorbing(s); ++step) {
            double u = uniform01(rng);
            std::size_t k = m.row_begin(s);
            const std::size_t end = m.row_end(s);
            for (double cum = m.probability(k); cum <= u && k + 1 < end; cum += m.probability(k))
                ++k;
            if (!reward.empty())
                acc += m.reward(reward, k);
            s = m.target(k);
            if (tgt[s])
                hit = true;
        }
        if (hit)
            ++res.hits;
        total += acc;
    }
    res.mean_reward = runs ? total / static_cast<double>(runs) : 0.0;
    return res;
}

// ============================================================================
// Mdp
// ============================================================================

bool Mdp::labelled(const std::string &name, std::size_t s) const {
    auto it = labels_.find(name);
    return it != labels_.end() && it->second[s];
}

const std::vector<char> &Mdp::label(const std::string &name) const { return lookup_label(labels_, name); }

Dtmc Mdp::induced(const std::vector<std::size_t> &policy) const {
    if (policy.size() != num_states())
        throw ModelError("policy size does not match the MDP");
    DtmcBuilder b({"cost"});
    for (std::size_t s = 0; s < num_states(); ++s)
        b.add_state();
    b.set_initial(initial_);
    for (std::size_t s = 0; s < num_states(); ++s) {
        std::size_t c = choice_begin(s) + policy[s];
        if (c >= choice_end(s))
            throw ModelError("policy selects a missing choice");
        for (std::size_t k = trans_begin(c); k < trans_end(c); ++k)
            b.add_transition(s, col_[k], prob_[k], {reward_[k]});
    }
    for (const auto &[name, v] : labels_) {
        b.declare_label(name);
        for (std::size_t s = 0; s < v.size(); ++s)
            if (v[s])
                b.add_label(name, s);
    }
    return b.build();
}

std::size_t MdpBuilder::add_state() {
    choices_.emplace_back();
    for (auto &[name, v] : labels_)
        v.push_back(0);
    return choices_.size() - 1;
}

void MdpBuilder::add_choice(std::size_t s, std::string name) {
    choices_.at(s).push_back({std::move(name), {}});
}

void MdpBuilder::add_transition(std::size_t s, std::size_t to, double p, double reward) {
    if (choices_.at(s).empty())
        throw ModelError("transition added before any choice");
    if (to >= choices_.size())
        throw ModelError("transition references an unknown state");
    choices_[s].back().edges.emplace_back(to, p, reward);
}

void MdpBuilder::declare_label(const std::string &name) {
    labels_.try_emplace(name, std::vector<char>(choices_.size(), 0));
}

void MdpBuilder::add_label(const std::string &name, std::size_t s) {
    declare_label(name);
    labels_[name].at(s) = 1;
}

Mdp MdpBuilder::build() const {
    Mdp m;
    if (choices_.empty())
        throw ModelError("MDP has no states");
    m.initial_ = initial_;
    m.state_ptr_.push_back(0);
    m.choice_ptr_.push_back(0);
    for (std::size_t s = 0; s < choices_.size(); ++s) {
        if (choices_[s].empty())
            throw ModelError("state " + std::to_string(s) + " has no enabled action");
        for (const auto &c : choices_[s]) {
            double total = 0.0;
            for (const auto &[to, p, r] : c.edges) {
                total += p;
                m.col_.push_back(static_cast<std::uint32_t>(to));
                m.prob_.push_back(p);
                m.reward_.push_back(r);
            }
            if (std::abs(total - 1.0) > kStochasticTolerance * std::max<std::size_t>(1, c.edges.size()))
                throw ModelError("choice " + c.name + " of state " + std::to_string(s) + " is not a distribution");
            m.choice_names_.push_back(c.name);
            m.choice_ptr_.push_back(m.col_.size());
        }
        m.state_ptr_.push_back(m.choice_names_.size());
    }
    m.labels_ = labels_;
    for (auto &[name, v] : m.labels_)
        v.resize(choices_.size(), 0);
    return m;
}

std::vector<double> mdp_max_reach_probabilities(const Mdp &m, const std::string &target, double tolerance) {
    const auto &tgt = m.label(target);
    const std::size_t n = m.num_states();
    // States that reach the target under some policy.
    std::vector<std::vector<std::uint32_t>> pred(n);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t c = m.choice_begin(s); c < m.choice_end(s); ++c)
            for (std::size_t k = m.trans_begin(c); k < m.trans_end(c); ++k)
                if (m.probability(k) > 0.0)
                    pred[m.target(k)].push_back(static_cast<std::uint32_t>(s));
    auto can = backward_closure(pred, tgt, nullptr);

    std::vector<double> x(n, 0.0);
    for (std::size_t s = 0; s < n; ++s)
        if (tgt[s])
            x[s] = 1.0;
    for (;;) {
        double delta = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (tgt[s] || !can[s])
                continue;
            double best = 0.0;
            for (std::size_t c = m.choice_begin(s); c < m.choice_end(s); ++c) {
                double v = 0.0;
                for (std::size_t k = m.trans_begin(c); k < m.trans_end(c); ++k)
                    v += m.probability(k) * x[m.target(k)];
                best = std::max(best, v);
            }
            delta = std::max(delta, std::abs(best - x[s]));
            x[s] = best;
        }
        if (delta < tolerance)
            break;
    }
    return x;
}

double mdp_max_reach_probability(const Mdp &m, const std::string &target, double tolerance) {
    return mdp_max_reach_probabilities(m, target, tolerance)[m.initial()];
}

double mdp_min_bounded_reward(const Mdp &m, int k) {
    if (k < 0)
        throw ContractViolation("reward bound must be nonnegative");
    const std::size_t n = m.num_states();
    std::vector<double> v(n, 0.0), next(n, 0.0);
    for (int step = 0; step < k; ++step) {
        for (std::size_t s = 0; s < n; ++s) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = m.choice_begin(s); c < m.choice_end(s); ++c) {
                double val = 0.0;
                for (std::size_t t = m.trans_begin(c); t < m.trans_end(c); ++t)
                    val += m.probability(t) * (m.reward(t) + v[m.target(t)]);
                best = std::min(best, val);
            }
            next[s] = best;
        }
        std::swap(v, next);
    }
    return v[m.initial()];
}

} // namespace hytask
