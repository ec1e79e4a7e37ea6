#pragma once
#include <string>

#include "bdpp/bilevel.hpp"
#include "bdpp/oracle.hpp"

namespace bdpp {

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(const std::string& field_path, const std::string& msg)
      : std::runtime_error(field_path + ": " + msg), field(field_path) {}
};

struct BenchmarkRef {
  enum class Mode { None, Generated, Imported };
  Mode mode = Mode::None;
  std::uint64_t seed = 0;
  std::string path;
};

struct RunConfig {
  SearchConfig search;
  SyntheticTaskParams task;
  BenchmarkRef benchmark;
  std::string trajectory_path = "trajectory.csv";
};

// Parses and validates the JSON config document. Unknown keys and
// out-of-range values raise ConfigError naming the offending field path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);  // IoError if unreadable

}  // namespace bdpp
