#include "hytask/bench.hpp"

#include "hytask/error.hpp"
#include "hytask/fixtures.hpp"
#include "hytask/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace hytask {

double geometric_median(std::vector<double> xs) {
    if (xs.empty())
        return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double geometric_sd(const std::vector<double> &xs) {
    if (xs.size() < 2)
        return 1.0;
    std::vector<double> l;
    for (double x : xs)
        l.push_back(std::log(std::max(x, 1e-12)));
    double mean = 0.0;
    for (double v : l)
        mean += v;
    mean /= static_cast<double>(l.size());
    double var = 0.0;
    for (double v : l)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(l.size() - 1);
    return std::exp(std::sqrt(var));
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void summarise(StageStats &s) {
    s.median = geometric_median(s.seconds);
    s.gsd = geometric_sd(s.seconds);
}

} // namespace

std::vector<BenchCell> run_bench(const BenchConfig &cfg) {
    std::vector<BenchCell> cells;
    for (int n : cfg.tasks) {
        for (int m : cfg.agents) {
            BenchCell cell;
            cell.tasks = n;
            cell.agents = m;
            auto start = Clock::now();
            for (int r = 0; r < cfg.repetitions; ++r) {
                // The same task layouts for every agent count.
                RandomInstanceConfig ic{n, m, cfg.grid, cfg.seed * 1000003u + static_cast<std::uint64_t>(n * 100 + r)};
                try {
                    ProblemSpec spec = random_instance(ic);
                    auto t0 = Clock::now();
                    Plan plan;
                    try {
                        plan = plan_mission(spec, cfg.planner);
                    } catch (const PlannerTimeout &) {
                        cell.plan.seconds.push_back(since(t0));
                        ++cell.timeouts;
                        continue;
                    } catch (const LimitExceeded &) {
                        cell.plan.seconds.push_back(since(t0));
                        ++cell.timeouts;
                        continue;
                    }
                    cell.plan.seconds.push_back(since(t0));
                    t0 = Clock::now();
                    ParametricPlanModel model = build_parametric_model(spec, plan);
                    cell.model.seconds.push_back(since(t0));
                    if (cfg.synthesize) {
                        t0 = Clock::now();
                        GaConfig ga = cfg.ga;
                        ga.seed = cfg.seed + static_cast<std::uint64_t>(r);
                        synthesize(model, ga);
                        cell.synth.seconds.push_back(since(t0));
                    }
                } catch (const Error &e) {
                    ++cell.failures;
                    cell.last_error = e.what();
                }
            }
            cell.wall_seconds = since(start);
            summarise(cell.plan);
            summarise(cell.model);
            summarise(cell.synth);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::string bench_to_json(const std::vector<BenchCell> &cells) {
    nlohmann::json doc = nlohmann::json::array();
    auto stage = [](const StageStats &s) {
        return nlohmann::json{{"median_s", s.median}, {"gsd", s.gsd}, {"samples", s.seconds}};
    };
    for (const auto &c : cells) {
        nlohmann::json j{{"tasks", c.tasks},
                         {"agents", c.agents},
                         {"plan", stage(c.plan)},
                         {"model", stage(c.model)},
                         {"synthesis", stage(c.synth)},
                         {"timeouts", c.timeouts},
                         {"failures", c.failures},
                         {"wall_s", c.wall_seconds}};
        if (!c.last_error.empty())
            j["last_error"] = c.last_error;
        doc.push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

std::string bench_to_csv(const std::vector<BenchCell> &cells) {
    std::string out = "tasks,agents,plan_median_s,plan_gsd,model_median_s,model_gsd,synth_median_s,synth_gsd,timeouts,failures\n";
    for (const auto &c : cells)
        out += std::to_string(c.tasks) + "," + std::to_string(c.agents) + "," + format_number(c.plan.median) + "," +
               format_number(c.plan.gsd) + "," + format_number(c.model.median) + "," + format_number(c.model.gsd) +
               "," + format_number(c.synth.median) + "," + format_number(c.synth.gsd) + "," +
               std::to_string(c.timeouts) + "," + std::to_string(c.failures) + "\n";
    return out;
}

} // namespace hytask
