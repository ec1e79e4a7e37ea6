#include "bdpp/report.hpp"

#include <cstdio>
#include <sstream>

namespace bdpp {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int first_epoch_fired(const std::vector<TrajectoryRecord>& traj, int criterion,
                      int M) {
  for (const auto& r : traj)
    if (criteria_fired(r.m, M).count(criterion)) return r.epoch;
  return -1;
}

const TrajectoryRecord* record_at(const std::vector<TrajectoryRecord>& traj,
                                  int epoch) {
  for (const auto& r : traj)
    if (r.epoch == epoch) return &r;
  return nullptr;
}

}  // namespace

std::string make_report(const std::vector<TrajectoryRecord>& traj,
                        const TabularBenchmark* bench) {
  if (traj.empty()) throw std::invalid_argument("report: empty trajectory");
  const int M = static_cast<int>(kNumEdges);
  const auto& last = traj.back();
  std::ostringstream os;

  os << "# Search report\n\n";
  os << "## Summary\n\n";
  os << "- epochs run: " << traj.size() << " (last epoch " << last.epoch << ")\n";
  os << "- final genotype: `" << last.genotype << "`\n";
  os << "- final losses: train " << num(last.l_train) << ", val "
     << num(last.l_val) << ", beta " << num(last.l_beta) << "\n";
  os << "- determined edges at end: " << last.m << " / " << M << "\n\n";

  os << "## Early-stop criteria vs last epoch\n\n";
  os << "| criterion | epoch | genotype |";
  if (bench) os << " score |";
  os << "\n|---|---|---|";
  if (bench) os << "---|";
  os << "\n";
  for (int c = 1; c <= 3; ++c) {
    const int e = first_epoch_fired(traj, c, M);
    os << "| c" << c << " | ";
    if (e < 0) {
      os << "not fired | - |";
      if (bench) os << " - |";
    } else {
      const auto* r = record_at(traj, e);
      os << e << " | `" << r->genotype << "` |";
      if (bench) os << " " << num(bench->evaluate(r->genotype)) << " |";
    }
    os << "\n";
  }
  os << "| last | " << last.epoch << " | `" << last.genotype << "` |";
  if (bench) os << " " << num(bench->evaluate(last.genotype)) << " |";
  os << "\n\n";

  if (bench) {
    const auto [best_geno, best_score] = bench->best();
    const double final_score = bench->evaluate(last.genotype);
    os << "## Regret vs brute-force best\n\n";
    os << "- brute-force best: `" << best_geno << "` score " << num(best_score)
       << "\n";
    os << "- final genotype score: " << num(final_score) << "\n";
    os << "- regret: " << num(best_score - final_score) << "\n\n";
  }

  os << "## Per-epoch alpha statistics\n\n";
  os << "| epoch | l_train | l_val | l_beta | m |";
  for (int e = 0; e < M; ++e) os << " e" << e << " std |";
  os << "\n|---|---|---|---|---|";
  for (int e = 0; e < M; ++e) os << "---|";
  os << "\n";
  for (const auto& r : traj) {
    os << "| " << r.epoch << " | " << num(r.l_train) << " | " << num(r.l_val)
       << " | " << num(r.l_beta) << " | " << r.m << " |";
    for (int e = 0; e < M; ++e) os << " " << num(r.edge_std[static_cast<std::size_t>(e)]) << " |";
    os << "\n";
  }
  return os.str();
}

}  // namespace bdpp
