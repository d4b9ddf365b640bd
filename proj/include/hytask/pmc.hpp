#pragma once

// Explicit-state probabilistic model checking: DTMC reachability and expected
// reachability reward, MDP maximal reachability and bounded cumulative reward.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace hytask {

struct SolverOptions {
    enum class Method { Auto, Direct, GaussSeidel };
    Method method = Method::Auto;
    double tolerance = 1e-10;       // absolute, for iterative solves
    std::size_t direct_limit = 50000; // Auto picks the direct solver up to this many unknowns
    std::size_t max_sweeps = 10000000;
    /// Called with the full value vector after every Gauss-Seidel sweep.
    std::function<void(const std::vector<double> &)> sweep_observer;
};

/// Sparse DTMC in compressed-row form. Rewards are attached to transitions.
class Dtmc {
public:
    std::size_t num_states() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
    std::size_t num_transitions() const { return col_.size(); }
    std::size_t initial() const { return initial_; }

    std::size_t row_begin(std::size_t s) const { return row_ptr_[s]; }
    std::size_t row_end(std::size_t s) const { return row_ptr_[s + 1]; }
    std::size_t target(std::size_t k) const { return col_[k]; }
    double probability(std::size_t k) const { return prob_[k]; }
    double reward(const std::string &name, std::size_t k) const;

    bool has_label(const std::string &name) const { return labels_.contains(name); }
    bool labelled(const std::string &name, std::size_t s) const;
    const std::vector<char> &label(const std::string &name) const;
    std::vector<std::string> label_names() const;
    std::vector<std::string> reward_names() const;

    /// Human-readable state description, when the builder recorded one.
    const std::string &valuation(std::size_t s) const;

    bool is_absorbing(std::size_t s) const {
        return row_end(s) - row_begin(s) == 1 && col_[row_begin(s)] == s;
    }

    /// Tab-separated "src dst prob reward" lines.
    std::string transition_list(const std::string &reward_name = "") const;

private:
    friend class DtmcBuilder;
    std::size_t initial_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> col_;
    std::vector<double> prob_;
    std::map<std::string, std::vector<double>> rewards_;
    std::map<std::string, std::vector<char>> labels_;
    std::vector<std::string> valuations_;
};

class DtmcBuilder {
public:
    explicit DtmcBuilder(std::vector<std::string> reward_names = {"cost"});

    std::size_t add_state(std::string valuation = {});
    std::size_t num_states() const { return out_.size(); }
    void set_initial(std::size_t s) { initial_ = s; }
    /// `rewards` follows the order of the builder's reward names; missing entries are zero.
    void add_transition(std::size_t from, std::size_t to, double p, std::vector<double> rewards = {});
    void add_label(const std::string &name, std::size_t s);
    /// Declares a label even if no state carries it.
    void declare_label(const std::string &name);

    /// Merges parallel transitions and checks that every row is a distribution.
    /// Throws ModelError on empty or non-stochastic rows.
    Dtmc build() const;

private:
    struct Edge {
        std::size_t to;
        double p;
        std::vector<double> r;
    };
    std::vector<std::string> reward_names_;
    std::vector<std::vector<Edge>> out_;
    std::vector<std::string> valuations_;
    std::map<std::string, std::vector<char>> labels_;
    std::size_t initial_ = 0;
};

/// States from which the target is reached with probability 0 / 1.
std::vector<char> prob0_states(const Dtmc &m, const std::vector<char> &target);
std::vector<char> prob1_states(const Dtmc &m, const std::vector<char> &target);

/// Values are exact for states reachable from the initial state.
std::vector<double> reach_probabilities(const Dtmc &m, const std::string &target, const SolverOptions &opts = {});
double reach_probability(const Dtmc &m, const std::string &target, const SolverOptions &opts = {});

/// Expected reward accumulated until the target is first hit. Throws
/// InfiniteReward unless the target is reached almost surely from the initial state.
double expected_reward(const Dtmc &m, const std::string &reward, const std::string &target,
                       const SolverOptions &opts = {});

struct MissionMetrics {
    double success_probability = 1.0;
    double expected_cost = 0.0;
};

/// Independent component chains labelled "success" and "done" with a "cost" reward:
/// success multiplies and cost adds.
MissionMetrics factored_mission_metrics(const std::vector<Dtmc> &chains, const SolverOptions &opts = {});

/// Interleaved product of independent chains. In each state the lowest-index
/// component that is not yet "done" takes the step. Throws StateBudgetExceeded.
Dtmc compose_product(const std::vector<Dtmc> &chains, std::size_t state_budget = 5'000'000);

struct SampleResult {
    std::size_t runs = 0;
    std::size_t hits = 0;
    double mean_reward = 0.0;
    double estimate() const { return runs ? static_cast<double>(hits) / static_cast<double>(runs) : 0.0; }
};

/// Simulates runs from the initial state until a `stop` state (or the target) is
/// reached, counting target hits and averaging the accumulated reward.
SampleResult sample_reach(const Dtmc &m, const std::string &target, const std::string &stop,
                          const std::string &reward, std::size_t runs, std::uint64_t seed,
                          std::size_t max_steps = 1'000'000);

/// MDP with labelled states, per-choice distributions and transition rewards.
class Mdp {
public:
    std::size_t num_states() const { return state_ptr_.empty() ? 0 : state_ptr_.size() - 1; }
    std::size_t num_choices() const { return choice_ptr_.empty() ? 0 : choice_ptr_.size() - 1; }
    std::size_t num_transitions() const { return col_.size(); }
    std::size_t initial() const { return initial_; }

    std::size_t choice_begin(std::size_t s) const { return state_ptr_[s]; }
    std::size_t choice_end(std::size_t s) const { return state_ptr_[s + 1]; }
    std::size_t trans_begin(std::size_t c) const { return choice_ptr_[c]; }
    std::size_t trans_end(std::size_t c) const { return choice_ptr_[c + 1]; }
    const std::string &choice_name(std::size_t c) const { return choice_names_[c]; }
    std::size_t target(std::size_t k) const { return col_[k]; }
    double probability(std::size_t k) const { return prob_[k]; }
    double reward(std::size_t k) const { return reward_[k]; }

    bool has_label(const std::string &name) const { return labels_.contains(name); }
    bool labelled(const std::string &name, std::size_t s) const;
    const std::vector<char> &label(const std::string &name) const;

    /// The DTMC induced by a memoryless policy (one choice index per state, local to the state).
    Dtmc induced(const std::vector<std::size_t> &policy) const;

private:
    friend class MdpBuilder;
    std::size_t initial_ = 0;
    std::vector<std::size_t> state_ptr_, choice_ptr_;
    std::vector<std::string> choice_names_;
    std::vector<std::uint32_t> col_;
    std::vector<double> prob_, reward_;
    std::map<std::string, std::vector<char>> labels_;
};

class MdpBuilder {
public:
    std::size_t add_state();
    std::size_t num_states() const { return choices_.size(); }
    void set_initial(std::size_t s) { initial_ = s; }
    /// Starts a new choice at `s`; subsequent add_transition calls extend it.
    void add_choice(std::size_t s, std::string name);
    void add_transition(std::size_t s, std::size_t to, double p, double reward = 0.0);
    void add_label(const std::string &name, std::size_t s);
    void declare_label(const std::string &name);

    /// Throws ModelError when a state has no choice or a choice is not a distribution.
    Mdp build() const;

private:
    struct Choice {
        std::string name;
        std::vector<std::tuple<std::size_t, double, double>> edges;
    };
    std::vector<std::vector<Choice>> choices_;
    std::map<std::string, std::vector<char>> labels_;
    std::size_t initial_ = 0;
};

double mdp_max_reach_probability(const Mdp &m, const std::string &target, double tolerance = 1e-10);
std::vector<double> mdp_max_reach_probabilities(const Mdp &m, const std::string &target,
                                                double tolerance = 1e-10);

/// Minimal expected reward accumulated within k steps, by backward induction.
double mdp_min_bounded_reward(const Mdp &m, int k = 20);

} // namespace hytask
