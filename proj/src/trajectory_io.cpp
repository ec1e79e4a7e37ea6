#include "bdpp/trajectory_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace bdpp {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string expected_header(std::size_t num_edges) {
  std::string h = "epoch,l_train,l_val,l_beta,m,genotype,oracle_score";
  for (std::size_t e = 0; e < num_edges; ++e) {
    const std::string p = ",e" + std::to_string(e) + "_";
    h += p + "mean" + p + "median" + p + "std";
  }
  return h;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw CsvError("trajectory: bad number '" + s + "'", line_no);
  }
}

}  // namespace

std::string trajectory_to_csv(const std::vector<TrajectoryRecord>& traj,
                              std::size_t num_edges) {
  std::string out = expected_header(num_edges) + "\n";
  for (const auto& r : traj) {
    out += std::to_string(r.epoch) + "," + num(r.l_train) + "," + num(r.l_val) +
           "," + num(r.l_beta) + "," + std::to_string(r.m) + "," + r.genotype +
           ",";
    if (r.oracle_score) out += num(*r.oracle_score);
    for (std::size_t e = 0; e < num_edges; ++e)
      out += "," + num(r.edge_mean[e]) + "," + num(r.edge_median[e]) + "," +
             num(r.edge_std[e]);
    out += "\n";
  }
  return out;
}

void save_trajectory(const std::string& path,
                     const std::vector<TrajectoryRecord>& traj,
                     std::size_t num_edges) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("trajectory: cannot open '" + path + "' for writing");
  out << trajectory_to_csv(traj, num_edges);
  if (!out) throw IoError("trajectory: write failure on '" + path + "'");
}

std::vector<TrajectoryRecord> load_trajectory(const std::string& path,
                                              std::size_t num_edges) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("trajectory: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != expected_header(num_edges))
    throw CsvError("trajectory: unexpected header", 1);
  std::vector<TrajectoryRecord> out;
  std::size_t line_no = 1;
  int last_epoch = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7 + 3 * num_edges)
      throw CsvError("trajectory: expected " + std::to_string(7 + 3 * num_edges) +
                         " fields, got " + std::to_string(f.size()),
                     line_no);
    TrajectoryRecord r;
    r.epoch = static_cast<int>(parse_num(f[0], line_no));
    if (r.epoch <= last_epoch)
      throw CsvError("trajectory: epochs must be strictly increasing", line_no);
    last_epoch = r.epoch;
    r.l_train = parse_num(f[1], line_no);
    r.l_val = parse_num(f[2], line_no);
    r.l_beta = parse_num(f[3], line_no);
    r.m = static_cast<int>(parse_num(f[4], line_no));
    r.genotype = f[5];
    if (!f[6].empty()) r.oracle_score = parse_num(f[6], line_no);
    for (std::size_t e = 0; e < num_edges; ++e) {
      r.edge_mean.push_back(parse_num(f[7 + 3 * e], line_no));
      r.edge_median.push_back(parse_num(f[8 + 3 * e], line_no));
      r.edge_std.push_back(parse_num(f[9 + 3 * e], line_no));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace bdpp
