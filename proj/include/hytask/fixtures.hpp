#pragma once

// Bundled missions and a generator of random benchmark instances.

#include "hytask/planner.hpp"

#include <cstdint>
#include <string>

namespace hytask {

/// Absolute path of a bundled data file.
std::string data_path(const std::string &name);

/// Nine-location vineyard: two workers, two robots, ten tasks.
ProblemSpec vineyard_spec();
/// The hand-written optimal vineyard plan (travel cost 8).
Plan vineyard_reference_plan(const ProblemSpec &spec);

/// One worker and one robot, three tasks, single attempts.
ProblemSpec m1_spec();
/// Two fallible tasks with three attempts each: nine genotypes.
ProblemSpec m2_spec();

struct RandomInstanceConfig {
    int tasks = 10;
    int agents = 2;   // alternately workers and robots
    int grid = 4;     // grid x grid locations, unit distances
    std::uint64_t seed = 1;
};

/// Task groups and capabilities follow the vineyard table; task locations are uniform
/// over the non-depot cells and every agent starts at the depot.
ProblemSpec random_instance(const RandomInstanceConfig &cfg);

} // namespace hytask
