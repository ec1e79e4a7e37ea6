#pragma once
#include <string>
#include <vector>

#include "bdpp/bilevel.hpp"
#include "bdpp/oracle.hpp"

namespace bdpp {

// Markdown report over a trajectory, optionally scored against a benchmark:
// search summary, criteria firing epochs vs the last epoch, per-epoch alpha
// statistics, and a regret section when a benchmark is supplied.
std::string make_report(const std::vector<TrajectoryRecord>& traj,
                        const TabularBenchmark* bench);

}  // namespace bdpp
