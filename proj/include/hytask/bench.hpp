#pragma once

// Scaling sweep over task and agent counts with per-stage wall-clock timing.

#include "hytask/planner.hpp"
#include "hytask/synthesis.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hytask {

/// Median of the samples (for scalars the geometric median is the ordinary median).
double geometric_median(std::vector<double> xs);
/// exp of the standard deviation of log(x); 1 for fewer than two samples.
double geometric_sd(const std::vector<double> &xs);

struct StageStats {
    std::vector<double> seconds;
    double median = 0.0;
    double gsd = 1.0;
};

struct BenchCell {
    int tasks = 0;
    int agents = 0;
    StageStats plan, model, synth;
    /// Instances whose planning hit the timeout or node budget; their planning
    /// samples hold the time spent before giving up.
    int timeouts = 0;
    int failures = 0;
    std::string last_error;
    double wall_seconds = 0.0;
};

struct BenchConfig {
    std::vector<int> tasks{10, 11, 12, 13};
    std::vector<int> agents{2, 4, 6};
    int repetitions = 5;
    int grid = 4;
    std::uint64_t seed = 1;
    PlannerConfig planner; // optimal search; per-instance timeout 60 s
    GaConfig ga;
    bool synthesize = true;
};

std::vector<BenchCell> run_bench(const BenchConfig &cfg);

std::string bench_to_json(const std::vector<BenchCell> &cells);
std::string bench_to_csv(const std::vector<BenchCell> &cells);

} // namespace hytask
