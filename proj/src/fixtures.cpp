#include "hytask/fixtures.hpp"

#include "hytask/util.hpp"

#include <random>

namespace hytask {

std::string data_path(const std::string &name) { return std::string(HYTASK_DATA_DIR) + "/" + name; }

ProblemSpec vineyard_spec() { return load_problem_spec(data_path("vineyard.json")); }

Plan vineyard_reference_plan(const ProblemSpec &spec) { return load_plan(spec, data_path("vineyard_plan.json")); }

ProblemSpec m1_spec() { return load_problem_spec(data_path("m1.json")); }

ProblemSpec m2_spec() { return load_problem_spec(data_path("m2.json")); }

ProblemSpec random_instance(const RandomInstanceConfig &cfg) {
    std::mt19937_64 rng(cfg.seed);
    ProblemSpec s;
    auto cell = [&](int r, int c) { return "l" + std::to_string(r * cfg.grid + c + 1); };
    for (int r = 0; r < cfg.grid; ++r)
        for (int c = 0; c < cfg.grid; ++c) {
            s.locations.push_back({cell(r, c), ""});
            if (c + 1 < cfg.grid)
                s.paths.push_back({cell(r, c), cell(r, c + 1), 1.0, ""});
            if (r + 1 < cfg.grid)
                s.paths.push_back({cell(r, c), cell(r + 1, c), 1.0, ""});
        }
    s.task_groups = {{"t1", "harvesting", {}}, {"t2", "monitoring", {}}, {"t3", "identification", {}}};
    const std::size_t cells = static_cast<std::size_t>(cfg.grid * cfg.grid);
    for (int i = 0; i < cfg.tasks; ++i) {
        auto &group = s.task_groups[static_cast<std::size_t>(i % 3)];
        std::string loc = s.locations[1 + uniform_index(rng, cells - 1)].id;
        group.members.push_back({group.id + "n" + std::to_string(i), group.id, loc});
    }
    for (int a = 0; a < cfg.agents; ++a) {
        Agent ag;
        ag.start_location = s.locations.front().id;
        if (a % 2 == 0) {
            ag.id = "w" + std::to_string(a / 2 + 1);
            ag.kind = AgentKind::Worker;
            ag.capabilities = {{"t1", 3, 1.0, 5}, {"t3", 5, 0.99, 5}};
        } else {
            ag.id = "r" + std::to_string(a / 2 + 1);
            ag.kind = AgentKind::Robot;
            ag.capabilities = {{"t2", 1, 0.99, 10}, {"t3", 1, 0.97, 10}};
        }
        s.agents.push_back(std::move(ag));
    }
    s.constraints = {0.95, 0.5};
    s.canonicalize();
    return s;
}

} // namespace hytask
