#include "hytask/synthesis.hpp"

#include "hytask/error.hpp"
#include "hytask/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <thread>

namespace hytask {

using nlohmann::json;

Objectives evaluate(const ParametricPlanModel &model, const RetryAssignment &x, const SolverOptions &opts) {
    MissionMetrics m = evaluate_metrics(model, x, opts);
    Objectives o;
    o.expected_cost = m.expected_cost;
    o.success_probability = m.success_probability;
    o.feasible = m.success_probability >= model.p_succ;
    o.violation = o.feasible ? 0.0 : model.p_succ - m.success_probability;
    return o;
}

bool dominates(const Objectives &a, const Objectives &b) {
    if (a.feasible != b.feasible)
        return a.feasible;
    if (!a.feasible)
        return a.violation < b.violation;
    bool no_worse = a.expected_cost <= b.expected_cost && a.success_probability >= b.success_probability;
    bool better = a.expected_cost < b.expected_cost || a.success_probability > b.success_probability;
    return no_worse && better;
}

std::vector<std::pair<double, double>> ParetoArchive::front() const {
    std::vector<std::pair<double, double>> pts;
    for (const auto &e : entries)
        pts.emplace_back(e.objectives.expected_cost, e.objectives.success_probability);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

const ArchiveEntry *ParetoArchive::find(const RetryAssignment &genotype) const {
    for (const auto &e : entries)
        if (e.genotype == genotype)
            return &e;
    return nullptr;
}

namespace {

bool entry_order(const ArchiveEntry &a, const ArchiveEntry &b) {
    if (a.objectives.expected_cost != b.objectives.expected_cost)
        return a.objectives.expected_cost < b.objectives.expected_cost;
    if (a.objectives.success_probability != b.objectives.success_probability)
        return a.objectives.success_probability > b.objectives.success_probability;
    return a.genotype < b.genotype;
}

RetryAssignment decode(const ParametricPlanModel &model, std::size_t index) {
    RetryAssignment x(model.slots.size());
    for (std::size_t i = model.slots.size(); i-- > 0;) {
        const auto &s = model.slots[i];
        std::size_t r = static_cast<std::size_t>(s.range_size());
        x[i] = s.lower + static_cast<int>(index % r);
        index /= r;
    }
    return x;
}

void check_model(const ParametricPlanModel &model) {
    for (const auto &s : model.slots)
        if (s.range_size() <= 0)
            throw ModelError("retry slot for " + s.task + " has an empty range");
}

std::vector<ArchiveEntry> evaluate_batch(const ParametricPlanModel &model, const std::vector<RetryAssignment> &batch,
                                         const SolverOptions &opts, int jobs) {
    std::vector<ArchiveEntry> out(batch.size());
    auto work = [&](std::size_t i) {
        out[i].genotype = batch[i];
        out[i].objectives = evaluate(model, batch[i], opts);
        out[i].retry_dict = to_retry_dict(model, batch[i]);
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), batch.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < batch.size(); ++i)
            work(i);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < batch.size(); i += threads)
                    work(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto &th : pool)
        th.join();
    for (auto &e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

// Fast nondominated sort; returns the rank of every individual.
std::vector<int> nondominated_ranks(const std::vector<const Objectives *> &pop) {
    const std::size_t n = pop.size();
    std::vector<int> rank(n, 0), count(n, 0);
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j)
                continue;
            if (dominates(*pop[i], *pop[j]))
                dominated[i].push_back(j);
            else if (dominates(*pop[j], *pop[i]))
                ++count[i];
        }
        if (count[i] == 0)
            current.push_back(i);
    }
    int r = 0;
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : current) {
            rank[i] = r;
            for (std::size_t j : dominated[i])
                if (--count[j] == 0)
                    next.push_back(j);
        }
        current = std::move(next);
        ++r;
    }
    return rank;
}

std::vector<double> crowding(const std::vector<const Objectives *> &pop, const std::vector<std::size_t> &members) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(members.size(), 0.0);
    if (members.size() <= 2) {
        std::fill(d.begin(), d.end(), inf);
        return d;
    }
    for (int obj = 0; obj < 2; ++obj) {
        auto value = [&](std::size_t k) {
            const Objectives &o = *pop[members[k]];
            return obj == 0 ? o.expected_cost : o.success_probability;
        };
        std::vector<std::size_t> idx(members.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
        double span = value(idx.back()) - value(idx.front());
        d[idx.front()] = d[idx.back()] = inf;
        if (span <= 0.0)
            continue;
        for (std::size_t k = 1; k + 1 < idx.size(); ++k)
            d[idx[k]] += (value(idx[k + 1]) - value(idx[k - 1])) / span;
    }
    return d;
}

struct Individual {
    ArchiveEntry entry;
    int rank = 0;
    double crowd = 0.0;
};

// Environmental selection of `size` individuals by (rank, crowding), ties by genotype.
std::vector<Individual> select_survivors(std::vector<Individual> pool, std::size_t size) {
    std::vector<const Objectives *> objs;
    for (const auto &ind : pool)
        objs.push_back(&ind.entry.objectives);
    auto ranks = nondominated_ranks(objs);
    int max_rank = ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end());
    for (std::size_t i = 0; i < pool.size(); ++i)
        pool[i].rank = ranks[i];
    for (int r = 0; r <= max_rank; ++r) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (ranks[i] == r)
                members.push_back(i);
        auto cd = crowding(objs, members);
        for (std::size_t k = 0; k < members.size(); ++k)
            pool[members[k]].crowd = cd[k];
    }
    std::sort(pool.begin(), pool.end(), [](const Individual &a, const Individual &b) {
        if (a.rank != b.rank)
            return a.rank < b.rank;
        if (a.crowd != b.crowd)
            return a.crowd > b.crowd;
        return a.entry.genotype < b.entry.genotype;
    });
    if (pool.size() > size)
        pool.resize(size);
    return pool;
}

} // namespace

std::vector<ArchiveEntry> pareto_filter(const std::vector<ArchiveEntry> &evaluated) {
    std::vector<ArchiveEntry> out;
    std::set<RetryAssignment> seen;
    for (std::size_t i = 0; i < evaluated.size(); ++i) {
        const auto &e = evaluated[i];
        if (!e.objectives.feasible || seen.contains(e.genotype))
            continue;
        bool dominated = false;
        for (const auto &other : evaluated) {
            if (dominates(other.objectives, e.objectives)) {
                dominated = true;
                break;
            }
        }
        if (!dominated) {
            seen.insert(e.genotype);
            out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(), entry_order);
    return out;
}

SynthesisResult synthesize(const ParametricPlanModel &model, const GaConfig &cfg, const SolverOptions &opts) {
    if (cfg.population < 2)
        throw ContractViolation("population size must be at least 2");
    if (cfg.evaluations < cfg.population)
        throw ContractViolation("evaluations must be at least the population size");
    check_model(model);

    SynthesisResult res;
    res.archive.seed = cfg.seed;
    res.archive.config = cfg;
    res.archive.slots = model.slots;
    std::mt19937_64 rng(cfg.seed);
    const std::size_t n = model.slots.size();
    const std::size_t space = model.space_size();
    const std::size_t budget = std::min<std::size_t>(static_cast<std::size_t>(cfg.evaluations), space);
    const double mutation = cfg.mutation_rate >= 0.0 ? cfg.mutation_rate : (n ? 1.0 / static_cast<double>(n) : 0.0);

    std::set<RetryAssignment> visited;
    auto random_genotype = [&] {
        RetryAssignment x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = model.slots[i].lower +
                   static_cast<int>(uniform_index(rng, static_cast<std::size_t>(model.slots[i].range_size())));
        return x;
    };
    auto mutate = [&](RetryAssignment &x) {
        for (std::size_t i = 0; i < n; ++i)
            if (uniform01(rng) < mutation)
                x[i] = model.slots[i].lower +
                       static_cast<int>(uniform_index(rng, static_cast<std::size_t>(model.slots[i].range_size())));
    };
    // A genotype not yet evaluated; falls back to probing the index space so the
    // search always makes progress while unvisited genotypes remain.
    auto fresh = [&](RetryAssignment x, const std::set<RetryAssignment> &pending) {
        for (int attempt = 0; attempt < 20 && (visited.contains(x) || pending.contains(x)); ++attempt)
            mutate(x);
        if (!visited.contains(x) && !pending.contains(x))
            return x;
        std::size_t idx = uniform_index(rng, space);
        for (;;) {
            x = decode(model, idx);
            if (!visited.contains(x) && !pending.contains(x))
                return x;
            idx = (idx + 1) % space;
        }
    };
    auto run_batch = [&](const std::vector<RetryAssignment> &batch) {
        auto evaluated = evaluate_batch(model, batch, opts, cfg.jobs);
        for (const auto &e : evaluated) {
            visited.insert(e.genotype);
            res.evaluations.push_back(e);
        }
        return evaluated;
    };

    std::vector<Individual> population;
    {
        std::vector<RetryAssignment> batch;
        std::set<RetryAssignment> pending;
        const std::size_t init = std::min<std::size_t>(static_cast<std::size_t>(cfg.population), budget);
        while (batch.size() < init) {
            RetryAssignment x = fresh(random_genotype(), pending);
            pending.insert(x);
            batch.push_back(std::move(x));
        }
        for (auto &e : run_batch(batch))
            population.push_back({std::move(e), 0, 0.0});
        population = select_survivors(std::move(population), static_cast<std::size_t>(cfg.population));
    }

    auto tournament = [&]() -> const Individual & {
        const Individual &a = population[uniform_index(rng, population.size())];
        const Individual &b = population[uniform_index(rng, population.size())];
        if (a.rank != b.rank)
            return a.rank < b.rank ? a : b;
        if (a.crowd != b.crowd)
            return a.crowd > b.crowd ? a : b;
        return a.entry.genotype <= b.entry.genotype ? a : b;
    };

    while (res.evaluations.size() < budget) {
        const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(cfg.population),
                                                       budget - res.evaluations.size());
        std::vector<RetryAssignment> batch;
        std::set<RetryAssignment> pending;
        while (batch.size() < want) {
            RetryAssignment c1 = tournament().entry.genotype;
            RetryAssignment c2 = tournament().entry.genotype;
            if (uniform01(rng) < cfg.crossover_rate) {
                for (std::size_t i = 0; i < n; ++i)
                    if (uniform01(rng) < 0.5)
                        std::swap(c1[i], c2[i]);
            }
            mutate(c1);
            mutate(c2);
            for (auto *c : {&c1, &c2}) {
                if (batch.size() >= want)
                    break;
                RetryAssignment x = fresh(*c, pending);
                pending.insert(x);
                batch.push_back(std::move(x));
            }
        }
        std::vector<Individual> pool = population;
        for (auto &e : run_batch(batch))
            pool.push_back({std::move(e), 0, 0.0});
        population = select_survivors(std::move(pool), static_cast<std::size_t>(cfg.population));
    }

    res.archive.entries = pareto_filter(res.evaluations);
    if (res.archive.entries.empty())
        res.archive.diagnostic = "no feasible assignment among " + std::to_string(res.evaluations.size()) +
                                 " evaluations (success floor " + format_number(model.p_succ) + ")";
    return res;
}

ParetoArchive exhaustive_synthesize(const ParametricPlanModel &model, std::size_t limit, const SolverOptions &opts) {
    check_model(model);
    const std::size_t space = model.space_size();
    if (space > limit)
        throw LimitExceeded("genotype space of " + std::to_string(space) + " exceeds the limit " +
                            std::to_string(limit));
    std::vector<RetryAssignment> all;
    all.reserve(space);
    for (std::size_t i = 0; i < space; ++i)
        all.push_back(decode(model, i));
    ParetoArchive a;
    a.slots = model.slots;
    a.entries = pareto_filter(evaluate_batch(model, all, opts, 1));
    if (a.entries.empty())
        a.diagnostic = "no feasible assignment in the genotype space (success floor " + format_number(model.p_succ) +
                       ")";
    return a;
}

std::string plan_hash(const Plan &plan) {
    std::string text;
    for (const auto &s : plan.total_order)
        text += s.to_string() + ";";
    return hex64(fnv1a64(text));
}

std::string archive_to_json(const ParetoArchive &archive) {
    json doc;
    doc["plan_hash"] = archive.plan_hash;
    doc["seed"] = archive.seed;
    doc["config"] = {{"population", archive.config.population},
                     {"evaluations", archive.config.evaluations},
                     {"crossover_rate", archive.config.crossover_rate},
                     {"mutation_rate", archive.config.mutation_rate},
                     {"jobs", archive.config.jobs}};
    json slots = json::array();
    for (const auto &s : archive.slots)
        slots.push_back({{"agent", s.agent},
                         {"task", s.task},
                         {"lower", s.lower},
                         {"upper", s.upper},
                         {"initial_failures", s.initial_failures}});
    doc["slots"] = std::move(slots);
    json entries = json::array();
    for (const auto &e : archive.entries)
        entries.push_back({{"retries", e.retry_dict},
                           {"expected_cost", e.objectives.expected_cost},
                           {"success_probability", e.objectives.success_probability},
                           {"feasible", e.objectives.feasible}});
    doc["entries"] = std::move(entries);
    json front = json::array();
    for (const auto &[c, p] : archive.front())
        front.push_back({c, p});
    doc["front"] = std::move(front);
    if (!archive.diagnostic.empty())
        doc["diagnostic"] = archive.diagnostic;
    return doc.dump(2) + "\n";
}

ParetoArchive archive_from_json(const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw SpecError("", std::string("malformed archive JSON: ") + e.what());
    }
    ParetoArchive a;
    try {
        a.plan_hash = doc.at("plan_hash").get<std::string>();
        a.seed = doc.at("seed").get<std::uint64_t>();
        const auto &c = doc.at("config");
        a.config.population = c.at("population").get<int>();
        a.config.evaluations = c.at("evaluations").get<int>();
        a.config.crossover_rate = c.at("crossover_rate").get<double>();
        a.config.mutation_rate = c.at("mutation_rate").get<double>();
        a.config.jobs = c.at("jobs").get<int>();
        a.config.seed = a.seed;
        for (const auto &s : doc.at("slots"))
            a.slots.push_back({s.at("agent").get<std::string>(), s.at("task").get<std::string>(),
                               s.at("lower").get<int>(), s.at("upper").get<int>(), s.at("initial_failures").get<int>()});
        for (const auto &e : doc.at("entries")) {
            ArchiveEntry en;
            en.retry_dict = e.at("retries").get<std::map<std::string, int>>();
            for (const auto &s : a.slots)
                en.genotype.push_back(en.retry_dict.at(s.task));
            en.objectives.expected_cost = e.at("expected_cost").get<double>();
            en.objectives.success_probability = e.at("success_probability").get<double>();
            en.objectives.feasible = e.at("feasible").get<bool>();
            a.entries.push_back(std::move(en));
        }
        if (doc.contains("diagnostic"))
            a.diagnostic = doc["diagnostic"].get<std::string>();
    } catch (const json::exception &e) {
        throw SpecError("", std::string("invalid archive document: ") + e.what());
    }
    return a;
}

std::string front_csv(const ParetoArchive &archive) {
    std::string out = "expected_cost,success_probability\n";
    for (const auto &[c, p] : archive.front())
        out += format_number(c) + "," + format_number(p) + "\n";
    return out;
}

} // namespace hytask
