#pragma once
#include <string>
#include <vector>

#include "bdpp/bilevel.hpp"

namespace bdpp {

// Trajectory CSV: exact header
// epoch,l_train,l_val,l_beta,m,genotype,oracle_score,e0_mean,e0_median,e0_std,...
// Numbers are printed with 9 significant digits; oracle_score is empty when
// no benchmark was attached.
std::string trajectory_to_csv(const std::vector<TrajectoryRecord>& traj,
                              std::size_t num_edges);
void save_trajectory(const std::string& path,
                     const std::vector<TrajectoryRecord>& traj,
                     std::size_t num_edges);

struct CsvError : std::runtime_error {
  std::size_t line;
  CsvError(const std::string& msg, std::size_t line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
};

std::vector<TrajectoryRecord> load_trajectory(const std::string& path,
                                              std::size_t num_edges);

}  // namespace bdpp
